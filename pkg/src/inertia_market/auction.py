"""Sealed-bid procurement auction with externality (VCG) payments.

The operator clears the market by minimizing the bid-weighted social cost
and pays each provider its externality: the increase in everyone else's
optimal cost that the provider's absence would cause, plus its own bid
value at the cleared quantity. Two clearing objectives are supported:

* trade-off mode (``run_auction``): the social cost is
  gamma * Gamma(m(mu)) + sum bids, and abstention re-solves use the same
  objective. Always feasible, and the mode under which the truthfulness
  and participation properties are audited.
* capped mode (``run_auction_hard``): quantities come from the
  minimum-cost solve under the worst-case cap, and abstention re-solves
  keep the cap. The cap binds in the base and abstention problems alike,
  so the metric terms cancel out of payments and the externality is a pure
  cost difference. An abstention re-solve can be infeasible when a
  provider is indispensable; that is reported as an error, never hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AuditError, ContractError, GridError
from .planner import (
    Agent,
    Allocation,
    CostCurve,
    dual_gamma_iterate,
    solve_centralized_hard,
    solve_centralized_soft,
)
from .robust import DisturbanceBudget, worst_case_metric

__all__ = [
    "AuctionOutcome",
    "AuditReport",
    "run_auction",
    "run_auction_hard",
    "exclusion_solve",
    "vcg_payment",
    "agent_utility",
    "incentive_audit",
    "random_convex_curve",
    "deviation_curve",
]

# Audit verdicts use this slack for floating-point noise.
AUDIT_TOL = 1e-6
_CONSISTENCY_TOL = 1e-7


@dataclass(frozen=True)
class AuctionOutcome:
    """Cleared quantities, payments, and the audit trail of objectives.

    ``utilities`` is filled only when true costs are supplied (payment
    minus true cost of the cleared quantity). ``exclusion_objectives[k]``
    is the social cost of the optimal plan with agent k absent; it is
    never below ``objective`` because abstention shrinks the feasible set.
    ``m0`` and ``pi_tot`` record the problem the outcome was solved on.
    """

    mu: np.ndarray
    payments: np.ndarray
    utilities: np.ndarray | None
    objective: float
    exclusion_objectives: np.ndarray
    level: float
    gamma: float
    mode: str  # "soft" (trade-off) or "hard" (capped)
    m0: np.ndarray
    pi_tot: float


def _bid_value(agents, mu) -> float:
    return sum(ag.curve.value(float(q)) for ag, q in zip(agents, mu))


def _worst_case(m, pi_tot) -> float:
    budget = DisturbanceBudget(pi_tot=pi_tot, n=int(np.asarray(m).shape[0]))
    return worst_case_metric(m, budget).gamma


def exclusion_solve(k: int, bids, gamma, m0, budget: DisturbanceBudget) -> Allocation:
    """Optimal trade-off plan when agent ``k`` abstains (its quantity pinned to 0)."""
    if k < 0 or k >= len(bids):
        raise GridError(f"agent index {k} out of range")
    return solve_centralized_soft(gamma, m0, bids, budget, excluded=(k,))


def vcg_payment(k: int, bids, base: AuctionOutcome, excl: Allocation) -> float:
    """Externality payment to agent ``k``.

    p_k = B(excluded plan) - (B(base plan) - bid_k(mu_k)), where B is the
    trade-off objective both plans were solved under. The base outcome and
    the exclusion plan must come from the same bids and gamma; both
    objectives are recomputed from the passed bids and mismatches are
    rejected rather than silently producing a wrong payment.
    """
    if k < 0 or k >= len(bids):
        raise GridError(f"agent index {k} out of range")
    if base.mode != "soft":
        raise ContractError("vcg_payment expects a trade-off mode outcome")
    m_base = _compose_inertia(base.m0, bids, base.mu)
    base_obj = base.gamma * _worst_case(m_base, base.pi_tot) + _bid_value(bids, base.mu)
    if not math.isclose(base_obj, base.objective, rel_tol=_CONSISTENCY_TOL, abs_tol=1e-9):
        raise ContractError(
            "base outcome does not match the supplied bids/gamma "
            f"(recomputed objective {base_obj:.9g} vs stored {base.objective:.9g})"
        )
    if excl.mu[k] != 0.0:
        raise ContractError(f"exclusion allocation still assigns quantity to agent {k}")
    excl_obj = base.gamma * _worst_case(excl.m, base.pi_tot) + _bid_value(bids, excl.mu)
    if not math.isclose(excl_obj, excl.objective, rel_tol=_CONSISTENCY_TOL, abs_tol=1e-9):
        raise ContractError(
            "exclusion allocation does not match the supplied bids/gamma "
            f"(recomputed objective {excl_obj:.9g} vs stored {excl.objective:.9g})"
        )
    return excl_obj - (base_obj - bids[k].curve.value(float(base.mu[k])))


def _compose_inertia(m0, agents, mu) -> np.ndarray:
    m = np.array(m0, dtype=float)
    for ag, q in zip(agents, mu):
        m[ag.bus] += q
    return m


def agent_utility(k: int, outcome: AuctionOutcome, true_cost: CostCurve) -> float:
    """Net profit of agent ``k``: payment minus true cost of the cleared quantity."""
    return float(outcome.payments[k]) - true_cost.value(float(outcome.mu[k]))


def _utilities(payments, mu, true_costs):
    if true_costs is None:
        return None
    return np.array([p - c.value(float(q)) for p, q, c in zip(payments, mu, true_costs)])


def run_auction(bids, gamma, m0, budget: DisturbanceBudget, true_costs=None) -> AuctionOutcome:
    """Clear the trade-off market on the submitted bid curves.

    Quantities minimize gamma * Gamma(m(mu)) + sum bids; each agent is
    paid its externality from an abstention re-solve under the same
    objective. Zero-quantity agents are still re-solved (their payments
    come out zero because abstention changes nothing).
    """
    m0 = np.asarray(m0, dtype=float)
    base = solve_centralized_soft(gamma, m0, bids, budget)
    n_agents = len(bids)
    payments = np.zeros(n_agents)
    excl_objs = np.zeros(n_agents)
    for k in range(n_agents):
        excl = exclusion_solve(k, bids, gamma, m0, budget)
        excl_objs[k] = excl.objective
        payments[k] = excl.objective - (base.objective - bids[k].curve.value(float(base.mu[k])))
    return AuctionOutcome(
        mu=base.mu,
        payments=payments,
        utilities=_utilities(payments, base.mu, true_costs),
        objective=base.objective,
        exclusion_objectives=excl_objs,
        level=base.level,
        gamma=float(gamma),
        mode="soft",
        m0=m0,
        pi_tot=budget.pi_tot,
    )


def run_auction_hard(bids, gamma_bar, m0, budget: DisturbanceBudget, true_costs=None) -> AuctionOutcome:
    """Clear the capped market and pay cost-difference externalities.

    Quantities come from the minimum-cost solve under
    Gamma(m) <= gamma_bar; agent k's payment is the abstention re-solve's
    cost increase plus its own bid value. The equivalent trade-off
    multiplier is recovered by the dual iteration and reported in
    ``gamma``.
    """
    m0 = np.asarray(m0, dtype=float)
    base = solve_centralized_hard(gamma_bar, m0, bids, budget)
    base_cost = base.total_cost
    n_agents = len(bids)
    payments = np.zeros(n_agents)
    excl_costs = np.zeros(n_agents)
    for k in range(n_agents):
        excl = solve_centralized_hard(gamma_bar, m0, bids, budget, excluded=(k,))
        excl_costs[k] = excl.total_cost
        payments[k] = excl.total_cost - (base_cost - bids[k].curve.value(float(base.mu[k])))
    gamma_star, _ = dual_gamma_iterate(gamma_bar, m0, bids, budget)
    return AuctionOutcome(
        mu=base.mu,
        payments=payments,
        utilities=_utilities(payments, base.mu, true_costs),
        objective=base_cost,
        exclusion_objectives=excl_costs,
        level=base.level,
        gamma=gamma_star,
        mode="hard",
        m0=m0,
        pi_tot=budget.pi_tot,
    )


# ---------------------------------------------------------------------------
# Incentive audit


@dataclass(frozen=True)
class AuditReport:
    """Result of a truthfulness audit over randomized deviations."""

    trials: int
    max_violation: float
    violations: int
    mean_truthful_utility: float
    mean_deviation_utility: float
    tolerance: float


def random_convex_curve(rng) -> CostCurve:
    """Random admissible bid: 1-3 segments, log-uniform prices, bounded cap."""
    n_seg = int(rng.integers(1, 4))
    prices = np.sort(np.exp(rng.uniform(np.log(0.1), np.log(20.0), size=n_seg)))
    cap = rng.uniform(1.0, 50.0)
    widths = cap * rng.dirichlet(np.ones(n_seg))
    return CostCurve(segments=tuple((float(w), float(p)) for w, p in zip(widths, prices)))


def deviation_curve(rng, curve: CostCurve) -> CostCurve:
    """Random deviation of a true curve: scale marginal prices, keep widths.

    Scale factors are log-uniform in [0.25, 4], covering under- and
    over-bidding; prices are re-sorted so the deviation stays an
    admissible convex message.
    """
    widths = [w for w, _ in curve.segments]
    factors = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=len(widths)))
    prices = sorted(p * f for (_, p), f in zip(curve.segments, factors))
    return CostCurve(segments=tuple((w, float(p)) for w, p in zip(widths, prices)))


def _utility_of_bid(k, bid_k, bids, true_cost_k, gamma, m0, budget, excl_obj):
    trial_bids = list(bids)
    trial_bids[k] = Agent(id=bids[k].id, bus=bids[k].bus, curve=bid_k)
    base = solve_centralized_soft(gamma, m0, trial_bids, budget)
    payment = excl_obj - (base.objective - bid_k.value(float(base.mu[k])))
    return payment - true_cost_k.value(float(base.mu[k]))


def incentive_audit(true_costs, gamma, m0, budget: DisturbanceBudget, trials: int, seed: int) -> AuditReport:
    """Randomized dominant-strategy audit of the trade-off auction.

    Each trial draws an agent, a random deviation of its true curve, and
    random admissible bids for everyone else, then checks that truthful
    bidding never loses more than the tolerance. A violation beyond the
    tolerance raises :class:`AuditError` carrying the instance for replay.
    """
    if trials < 1:
        raise GridError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    m0 = np.asarray(m0, dtype=float)
    n_agents = len(true_costs)
    max_violation = -math.inf
    sum_truth = 0.0
    sum_dev = 0.0
    for trial in range(trials):
        k = int(rng.integers(n_agents))
        bids = [
            ag if j == k else Agent(id=ag.id, bus=ag.bus, curve=random_convex_curve(rng))
            for j, ag in enumerate(true_costs)
        ]
        deviation = deviation_curve(rng, true_costs[k].curve)
        # The abstention plan does not depend on agent k's bid; solve once.
        excl_obj = exclusion_solve(k, bids, gamma, m0, budget).objective
        u_truth = _utility_of_bid(
            k, true_costs[k].curve, bids, true_costs[k].curve, gamma, m0, budget, excl_obj
        )
        u_dev = _utility_of_bid(
            k, deviation, bids, true_costs[k].curve, gamma, m0, budget, excl_obj
        )
        violation = u_dev - u_truth
        max_violation = max(max_violation, violation)
        sum_truth += u_truth
        sum_dev += u_dev
        if violation > AUDIT_TOL:
            instance = {
                "trial": trial,
                "agent": true_costs[k].id,
                "gamma": float(gamma),
                "pi_tot": float(budget.pi_tot),
                "m0": [float(x) for x in m0],
                "bids": [
                    {"id": ag.id, "bus": int(ag.bus), "segments": list(map(list, ag.curve.segments))}
                    for ag in bids
                ],
                "deviation": list(map(list, deviation.segments)),
                "u_truth": float(u_truth),
                "u_dev": float(u_dev),
            }
            raise AuditError(
                f"truthful bidding lost {violation:.3e} (> {AUDIT_TOL:.0e}) for agent "
                f"{true_costs[k].id!r} on trial {trial}",
                instance=instance,
            )
    return AuditReport(
        trials=trials,
        max_violation=max_violation,
        violations=0,
        mean_truthful_utility=sum_truth / trials,
        mean_deviation_utility=sum_dev / trials,
        tolerance=AUDIT_TOL,
    )
