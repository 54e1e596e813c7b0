"""Inertia procurement planning over piecewise-linear convex cost curves.

The worst-case metric depends only on the least-inertia bus, so optimal
plans are valley-filling: pick a level L, raise every bus below it to
exactly L at minimum cost, and leave the rest alone. Costs are convex
piecewise-linear in L, which makes the trade-off objective

    F(L) = gamma * pi_tot / L + total_fill_cost(L)

convex with finitely many slope breakpoints. The solver enumerates the
breakpoints, minimizes analytically inside each linear piece, and is exact
up to floating point.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import GridError, InfeasibleError, NumericsError, ScenarioError
from .robust import DisturbanceBudget, expand_performance_constraint, worst_case_metric

__all__ = [
    "CostCurve",
    "Agent",
    "Allocation",
    "node_fill_cost",
    "solve_centralized_soft",
    "solve_centralized_hard",
    "dual_gamma_iterate",
    "regulatory_allocation",
]

# Bisection control for the dual iteration on gamma.
DUAL_GAMMA_TOL = 1e-9
DUAL_MAX_STEPS = 200


@dataclass(frozen=True)
class CostCurve:
    """Convex nondecreasing piecewise-linear money-vs-quantity curve.

    ``segments`` is an ordered tuple of (width, marginal_price); widths are
    positive, prices nonnegative and nondecreasing. The curve starts at
    value 0 for quantity 0 and its capacity is the summed width.
    """

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ScenarioError("cost curve needs at least one segment")
        last_price = -math.inf
        for k, (width, price) in enumerate(self.segments):
            if not (width > 0):
                raise ScenarioError(f"segment {k}: width must be positive, got {width!r}")
            if price < 0:
                raise ScenarioError(f"segment {k}: price must be nonnegative, got {price!r}")
            if price < last_price:
                raise ScenarioError(
                    "marginal prices must be nondecreasing (convexity), "
                    f"segment {k} has {price!r} after {last_price!r}"
                )
            last_price = price

    @property
    def cap(self) -> float:
        return sum(w for w, _ in self.segments)

    def value(self, q: float) -> float:
        """Curve value at quantity ``q``, clamped to [0, cap]."""
        if q <= 0:
            return 0.0
        total = 0.0
        remaining = q
        for width, price in self.segments:
            take = min(remaining, width)
            total += take * price
            remaining -= take
            if remaining <= 0:
                break
        return total

    @classmethod
    def linear(cls, price: float, cap: float) -> "CostCurve":
        return cls(segments=((cap, price),))


@dataclass(frozen=True)
class Agent:
    """A virtual inertia provider at one bus with a money-vs-inertia curve."""

    id: str
    bus: int
    curve: CostCurve

    @property
    def cap(self) -> float:
        return self.curve.cap


@dataclass(frozen=True)
class Allocation:
    """Procurement result: per-agent quantities and the resulting inertia.

    ``objective_parts`` is (gamma_term, cost_term); the gamma term is zero
    for the hard-constrained and regulatory solves, whose objective is cost
    alone.
    """

    mu: np.ndarray
    m: np.ndarray
    level: float
    objective_parts: tuple[float, float]

    @property
    def objective(self) -> float:
        return self.objective_parts[0] + self.objective_parts[1]

    @property
    def total_cost(self) -> float:
        return self.objective_parts[1]


class _BusSupply:
    """Ascending-price merge of the curves offered at one bus."""

    def __init__(self, offers):
        # offers: list of (agent_position, CostCurve), position local to the bus
        entries = []
        for pos, curve in offers:
            for width, price in curve.segments:
                entries.append((price, pos, width))
        entries.sort(key=lambda t: t[0])
        self.tiers = []  # (price, [(pos, width), ...]) grouped by equal price
        for price, pos, width in entries:
            if self.tiers and self.tiers[-1][0] == price:
                self.tiers[-1][1].append((pos, width))
            else:
                self.tiers.append((price, [(pos, width)]))
        self.n_offers = len(offers)
        self.knots = [0.0]
        self.knot_costs = [0.0]
        for price, members in self.tiers:
            width = sum(w for _, w in members)
            self.knots.append(self.knots[-1] + width)
            self.knot_costs.append(self.knot_costs[-1] + width * price)
        self.capacity = self.knots[-1]

    def cost_at(self, q: float) -> float:
        if q <= 0:
            return 0.0
        j = bisect_right(self.knots, q) - 1
        if j >= len(self.tiers):
            return self.knot_costs[-1]
        return self.knot_costs[j] + (q - self.knots[j]) * self.tiers[j][0]

    def marginal_price_at(self, q: float) -> float:
        j = bisect_right(self.knots, q) - 1
        j = min(max(j, 0), len(self.tiers) - 1)
        return self.tiers[j][0]

    def fill(self, q: float):
        """Minimum-cost fills summing to ``q`` with the equal-split tie rule.

        Cheaper tiers are consumed first; inside a tier the marginal
        quantity splits equally over the agents offering at that price,
        clipping at their remaining widths and re-splitting what the clip
        frees up.
        """
        fills = [0.0] * self.n_offers
        cost = 0.0
        remaining = q
        for price, members in self.tiers:
            if remaining <= 0:
                break
            avail = {}
            for pos, width in members:
                avail[pos] = avail.get(pos, 0.0) + width
            tier_total = sum(avail.values())
            if remaining >= tier_total:
                for pos, width in avail.items():
                    fills[pos] += width
                cost += tier_total * price
                remaining -= tier_total
                continue
            active = dict(avail)
            r = remaining
            while active and r > 0:
                share = r / len(active)
                clipped = [pos for pos, a in active.items() if a <= share]
                if not clipped:
                    for pos in active:
                        fills[pos] += share
                    break
                for pos in clipped:
                    a = active.pop(pos)
                    fills[pos] += a
                    r -= a
            cost += remaining * price
            remaining = 0.0
        if remaining > 1e-9 * max(1.0, q):
            raise InfeasibleError(
                f"required fill {q:.6g} exceeds bus capacity {self.capacity:.6g}"
            )
        return cost, fills


def node_fill_cost(agents_at_bus, target: float, m0_i: float):
    """Cheapest fills at one bus lifting inertia from ``m0_i`` to ``target``.

    Returns (cost, per-agent fills) in the order of ``agents_at_bus``.
    Raises :class:`InfeasibleError` when the deficit exceeds the combined
    capacity at the bus.
    """
    if target < 0:
        raise GridError("target level must be nonnegative")
    supply = _BusSupply([(k, ag.curve) for k, ag in enumerate(agents_at_bus)])
    return supply.fill(max(0.0, target - m0_i))


def _group_by_bus(n: int, agents, excluded):
    by_bus = [[] for _ in range(n)]
    for k, ag in enumerate(agents):
        if ag.bus < 0 or ag.bus >= n:
            raise GridError(f"agent {ag.id!r}: bus index {ag.bus} out of range")
        if k in excluded:
            continue
        by_bus[ag.bus].append((k, ag))
    return by_bus


def _assemble(m0, agents, level, supplies, by_bus, gamma, budget):
    n = len(m0)
    mu = np.zeros(len(agents))
    m = np.array(m0, dtype=float)
    cost = 0.0
    for i in range(n):
        need = max(0.0, level - m0[i])
        if need <= 0 or not by_bus[i]:
            continue
        bus_cost, fills = supplies[i].fill(min(need, supplies[i].capacity))
        cost += bus_cost
        for (k, _), f in zip(by_bus[i], fills):
            mu[k] = f
            m[i] += f
    gamma_term = gamma * worst_case_metric(m, budget).gamma if gamma > 0 else 0.0
    return Allocation(mu=mu, m=m, level=float(level), objective_parts=(float(gamma_term), float(cost)))


def _solve_soft(gamma, m0, agents, budget, excluded):
    m0 = np.asarray(m0, dtype=float)
    n = m0.shape[0]
    if np.any(m0 <= 0):
        raise GridError("residual inertia must be positive at every bus")
    if budget.n != n:
        raise GridError(f"budget dimension {budget.n} does not match {n} buses")
    by_bus = _group_by_bus(n, agents, excluded)
    supplies = [_BusSupply([(p, ag.curve) for p, (_, ag) in enumerate(by_bus[i])]) for i in range(n)]

    lo = float(np.min(m0))
    cap = min(float(m0[i]) + supplies[i].capacity for i in range(n))
    weight = gamma * budget.pi_tot

    candidates = {lo, cap}
    for i in range(n):
        if lo < m0[i] < cap:
            candidates.add(float(m0[i]))
        for knot in supplies[i].knots[1:]:
            lvl = float(m0[i]) + knot
            if lo < lvl < cap:
                candidates.add(lvl)
    levels = sorted(candidates)

    def total_cost(level):
        return sum(
            supplies[i].cost_at(level - m0[i]) for i in range(n) if level > m0[i]
        )

    def objective(level):
        return weight / level + total_cost(level)

    evals = [(objective(lvl), lvl) for lvl in levels]
    if weight > 0:
        for a, b in zip(levels, levels[1:]):
            mid = 0.5 * (a + b)
            slope = sum(
                supplies[i].marginal_price_at(mid - m0[i]) for i in range(n) if m0[i] < mid
            )
            if slope > 0:
                stationary = math.sqrt(weight / slope)
                if a < stationary < b:
                    evals.append((objective(stationary), stationary))
    best_level = min(evals, key=lambda t: (t[0], t[1]))[1]
    return _assemble(m0, agents, best_level, supplies, by_bus, gamma, budget)


def solve_centralized_soft(gamma, m0, agents, budget: DisturbanceBudget, *, excluded=()) -> Allocation:
    """Global minimizer of gamma * Gamma(m(mu)) + sum_k cost_k(mu_k).

    Candidate levels are every bus's residual inertia and every merged
    supply breakpoint, capped at the highest level the weakest bus can
    reach; between consecutive candidates the fill cost is affine with
    slope s, so the objective is minimized at sqrt(gamma * pi_tot / s)
    clamped to the piece. ``excluded`` removes agents from the market
    (their allocation is pinned to zero) and is what the auction's
    externality computation uses.
    """
    if gamma <= 0:
        raise GridError("gamma must be positive")
    return _solve_soft(float(gamma), m0, agents, budget, frozenset(excluded))


def _required_level(gamma_bar, m0, agents, budget, excluded):
    level = expand_performance_constraint(gamma_bar, budget, len(m0))
    by_bus = _group_by_bus(len(m0), agents, excluded)
    supplies = [_BusSupply([(p, ag.curve) for p, (_, ag) in enumerate(by_bus[i])]) for i in range(len(m0))]
    reach = [float(m0[i]) + supplies[i].capacity for i in range(len(m0))]
    worst = int(np.argmin(reach))
    if level > reach[worst] and level - reach[worst] > 1e-9 * max(1.0, level):
        raise InfeasibleError(
            f"performance cap needs inertia level {level:.6g} but bus {worst} "
            f"can reach at most {reach[worst]:.6g}",
            bus=worst,
        )
    return level, by_bus, supplies


def solve_centralized_hard(gamma_bar, m0, agents, budget: DisturbanceBudget, *, excluded=()) -> Allocation:
    """Minimum-cost allocation meeting the worst-case cap Gamma(m) <= gamma_bar.

    Equivalent to lifting every deficient bus to the uniform level
    pi_tot / gamma_bar at minimum cost; infeasibility is reported with the
    blocking bus.
    """
    m0 = np.asarray(m0, dtype=float)
    if np.any(m0 <= 0):
        raise GridError("residual inertia must be positive at every bus")
    excluded = frozenset(excluded)
    level, by_bus, supplies = _required_level(gamma_bar, m0, agents, budget, excluded)
    return _assemble(m0, agents, level, supplies, by_bus, 0.0, budget)


def dual_gamma_iterate(gamma_bar, m0, agents, budget: DisturbanceBudget):
    """Bisection on the multiplier linking the trade-off and capped problems.

    Seeks gamma maximizing -gamma * gamma_bar + min_mu (cost + gamma *
    Gamma), driving the trade-off solution's worst case onto the cap. The
    sign of Gamma(m*(gamma)) - gamma_bar steers the bracket; the returned
    allocation matches the hard-constrained cost to solver precision.
    Returns (gamma_star, allocation).
    """
    m0 = np.asarray(m0, dtype=float)
    if np.any(m0 <= 0):
        raise GridError("residual inertia must be positive at every bus")
    # Feasibility gate, with the blocking bus reported.
    _required_level(gamma_bar, m0, agents, budget, frozenset())

    if worst_case_metric(m0, budget).gamma <= gamma_bar:
        by_bus = _group_by_bus(len(m0), agents, frozenset())
        supplies = [
            _BusSupply([(p, ag.curve) for p, (_, ag) in enumerate(by_bus[i])])
            for i in range(len(m0))
        ]
        return 0.0, _assemble(m0, agents, float(np.min(m0)), supplies, by_bus, 0.0, budget)

    def worst_at(gamma):
        alloc = _solve_soft(gamma, m0, agents, budget, frozenset())
        return worst_case_metric(alloc.m, budget).gamma, alloc

    lo = 0.0
    cost_lo = 0.0  # infeasible side never fills past the required level
    hi = 1.0
    for _ in range(DUAL_MAX_STEPS):
        gamma_hi, alloc_hi = worst_at(hi)
        if gamma_hi <= gamma_bar:
            break
        lo, cost_lo = hi, alloc_hi.total_cost
        hi *= 2.0
    else:
        raise NumericsError("dual iteration failed to bracket the multiplier")

    def converged():
        if hi - lo > DUAL_GAMMA_TOL:
            return False
        # The bracket's costs sandwich the capped problem's optimum: the
        # infeasible side underfills, the feasible side overfills. Closing
        # that gap is what makes the returned cost trustworthy even when
        # the multiplier itself is tiny.
        gap = alloc_hi.total_cost - cost_lo
        return gap <= max(1e-7 * abs(alloc_hi.total_cost), 5e-10)

    steps = 0
    while not converged():
        steps += 1
        if steps > DUAL_MAX_STEPS:
            raise NumericsError(
                f"dual iteration did not converge within {DUAL_MAX_STEPS} bisection steps"
            )
        mid = 0.5 * (lo + hi)
        gamma_mid, alloc_mid = worst_at(mid)
        if gamma_mid > gamma_bar:
            lo, cost_lo = mid, alloc_mid.total_cost
        else:
            hi, alloc_hi = mid, alloc_mid
    return hi, alloc_hi


def regulatory_allocation(gamma_bar, m0, agents, budget: DisturbanceBudget) -> Allocation:
    """Capacity-proportional procurement meeting the worst-case cap.

    Each deficient bus's gap to the required level splits over its agents
    in proportion to their capacities, regardless of cost.
    """
    m0 = np.asarray(m0, dtype=float)
    if np.any(m0 <= 0):
        raise GridError("residual inertia must be positive at every bus")
    level, by_bus, _ = _required_level(gamma_bar, m0, agents, budget, frozenset())
    mu = np.zeros(len(agents))
    m = np.array(m0, dtype=float)
    cost = 0.0
    for i, members in enumerate(by_bus):
        deficit = max(0.0, level - m0[i])
        if deficit <= 0 or not members:
            continue
        total_cap = sum(ag.cap for _, ag in members)
        for k, ag in members:
            share = deficit * ag.cap / total_cap
            mu[k] = share
            m[i] += share
            cost += ag.curve.value(share)
    return Allocation(mu=mu, m=m, level=float(level), objective_parts=(0.0, float(cost)))
