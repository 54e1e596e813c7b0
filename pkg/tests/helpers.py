"""Shared generators and independent oracles for the test suite.

The oracles deliberately avoid the code paths they check: the Gramian
oracle integrates the matrix exponential numerically, the planner oracle
grid-searches the fill level, and the worst-case oracle enumerates
polytope vertices.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from inertia_market import Agent, CostCurve, DisturbanceBudget, build_grid


def make_grid(m0, d, lines, labels=None):
    """Grid from plain arrays; lines are (i, j, b) with integer indices."""
    n = len(m0)
    labels = labels or [str(k + 1) for k in range(n)]
    return build_grid(
        {
            "buses": [
                {"label": labels[k], "m0": float(m0[k]), "d": float(d[k])} for k in range(n)
            ],
            "lines": [
                {"from": labels[i], "to": labels[j], "b": float(b)} for i, j, b in lines
            ],
        }
    )


def random_connected_grid(rng, n=None, n_range=(2, 8)):
    """Random spanning tree plus extra edges; moderate parameter ranges."""
    if n is None:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
    lines = []
    for j in range(1, n):
        i = int(rng.integers(j))
        lines.append((i, j, float(rng.uniform(0.5, 2.0))))
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        i, j = rng.choice(n, size=2, replace=False)
        if not any({i, j} == {a, b} for a, b, _ in lines):
            lines.append((int(i), int(j), float(rng.uniform(0.5, 2.0))))
    m0 = rng.uniform(0.5, 4.0, size=n)
    d = rng.uniform(0.5, 3.0, size=n)
    return make_grid(m0, d, lines)


def gramian_oracle(A, Q, rel_tol=1e-10):
    """Observability Gramian by quadrature of expm(A't) Q expm(At).

    Valid because Q annihilates the drift mode, so the integrand decays at
    the slowest strictly stable rate; the result is projected off the
    drift mode on both sides to scrub numerical leakage.
    """
    n2 = A.shape[0]
    n = n2 // 2
    eigs = np.linalg.eigvals(A)
    decay = -max(e.real for e in eigs if e.real < -1e-9)
    horizon = 40.0 / decay

    def integrand(t):
        E = expm(A * t)
        return E.T @ Q @ E

    P, _ = quad_vec(integrand, 0.0, horizon, epsabs=1e-12, epsrel=rel_tol)
    v0 = np.zeros(n2)
    v0[:n] = 1.0
    proj = np.eye(n2) - np.outer(v0, v0) / n
    return proj @ P @ proj


def random_psd_block_weight(rng, n):
    """Random Q = blkdiag(Q1, diag(Q2)) with Q1 PSD annihilating the all-ones mode."""
    W = rng.normal(size=(n, n))
    center = np.eye(n) - np.ones((n, n)) / n
    Q1 = center @ (W @ W.T) @ center
    Q1 = 0.5 * (Q1 + Q1.T)
    Q2 = rng.uniform(0.0, 2.0, size=n)
    Q = np.zeros((2 * n, 2 * n))
    Q[:n, :n] = Q1
    Q[n:, n:] = np.diag(Q2)
    return Q


def matrix_sqrt_psd(Q):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below the noise floor are zeroed so the root annihilates
    the kernel of Q exactly instead of leaking sqrt(eps).
    """
    vals, vecs = np.linalg.eigh(0.5 * (Q + Q.T))
    vals = np.clip(vals, 0.0, None)
    vals[vals < 1e-12 * max(vals.max(), 1e-300)] = 0.0
    return vecs @ np.diag(np.sqrt(vals)) @ vecs.T


def random_market(rng, max_buses=4, max_agents=6, max_segments=3):
    """Random planner instance: residual inertia, agents, budget."""
    n = int(rng.integers(1, max_buses + 1))
    m0 = rng.uniform(0.5, 4.0, size=n)
    n_agents = int(rng.integers(1, max_agents + 1))
    agents = []
    for k in range(n_agents):
        n_seg = int(rng.integers(1, max_segments + 1))
        prices = np.sort(np.exp(rng.uniform(np.log(0.1), np.log(20.0), size=n_seg)))
        widths = rng.uniform(0.3, 2.0, size=n_seg)
        curve = CostCurve(tuple((float(w), float(p)) for w, p in zip(widths, prices)))
        agents.append(Agent(id=f"a{k}", bus=int(rng.integers(n)), curve=curve))
    budget = DisturbanceBudget(pi_tot=float(rng.uniform(0.5, 20.0)), n=n)
    return m0, agents, budget


def fill_cost_knots(m0_i, agents_at_bus):
    """Piecewise-linear (level, cost) knots of the cheapest fill at one bus."""
    offers = []
    for ag in agents_at_bus:
        offers.extend((p, w) for w, p in ag.curve.segments)
    offers.sort()
    levels = [m0_i]
    costs = [0.0]
    for p, w in offers:
        levels.append(levels[-1] + w)
        costs.append(costs[-1] + w * p)
    return np.asarray(levels), np.asarray(costs)


def grid_search_objective(gamma, m0, agents, budget, step=1e-4):
    """Brute-force minimum of the trade-off objective over fill levels."""
    n = len(m0)
    by_bus = [[] for _ in range(n)]
    for ag in agents:
        by_bus[ag.bus].append(ag)
    lo = float(np.min(m0))
    cap = min(
        float(m0[i]) + sum(ag.cap for ag in by_bus[i]) for i in range(n)
    )
    levels = np.arange(lo, cap, step)
    levels = np.append(levels, cap)
    total = gamma * budget.pi_tot / levels
    for i in range(n):
        knots, costs = fill_cost_knots(float(m0[i]), by_bus[i])
        total += np.interp(levels, knots, costs)
    best = int(np.argmin(total))
    return float(total[best]), float(levels[best])


def interior_budget_points(rng, n, pi_tot, count):
    """Random strength vectors strictly inside the budget polytope."""
    points = rng.dirichlet(np.ones(n), size=count) * pi_tot
    return points * rng.uniform(0.0, 1.0, size=(count, 1))
