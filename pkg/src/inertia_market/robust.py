"""Worst-case droop-effort metric over the disturbance budget polytope.

Admissible disturbances are nonnegative strength vectors whose total does
not exceed pi_tot. The metric is linear in the strengths, so the worst
case sits at a polytope vertex: the whole budget lands on the bus with the
least inertia, giving Gamma(m) = pi_tot * max_i 1/m_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError

__all__ = [
    "DisturbanceBudget",
    "WorstCase",
    "worst_case_metric",
    "expand_performance_constraint",
]


@dataclass(frozen=True)
class DisturbanceBudget:
    """Total disturbance-energy budget pi_tot over ``n`` buses."""

    pi_tot: float
    n: int

    def __post_init__(self):
        if self.pi_tot < 0:
            raise GridError("pi_tot must be nonnegative")
        if self.n < 1:
            raise GridError("budget dimension must be at least 1")


@dataclass(frozen=True)
class WorstCase:
    """Worst-case value with its dual multiplier and maximizing vertex."""

    gamma: float
    rho: float
    pi_star: np.ndarray
    argmax_bus: int


def worst_case_metric(m, budget: DisturbanceBudget) -> WorstCase:
    """Gamma(m) = pi_tot * max_i 1/m_i, with the maximizing disturbance.

    Equivalently the value of the dual problem min pi_tot * rho subject to
    1/m_i <= rho. Ties in the attaining bus break to the lowest index; the
    value itself is tie-invariant.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or m.shape[0] != budget.n:
        raise GridError(f"inertia vector has shape {m.shape}, expected ({budget.n},)")
    if np.any(m <= 0):
        raise GridError("inertia entries must be positive")
    recip = 1.0 / m
    i_star = int(np.argmax(recip))
    rho = float(recip[i_star])
    gamma = budget.pi_tot * rho
    pi_star = np.zeros(budget.n)
    pi_star[i_star] = budget.pi_tot
    return WorstCase(gamma=gamma, rho=rho, pi_star=pi_star, argmax_bus=i_star)


def expand_performance_constraint(gamma_bar: float, budget: DisturbanceBudget, n: int) -> float:
    """Uniform inertia floor equivalent to the cap Gamma(m) <= gamma_bar.

    The vertex expansion of the worst-case constraint is pi_tot <=
    gamma_bar * m_i for every bus, i.e. m_i >= L with
    L = pi_tot / gamma_bar. Returns that level; the cap holds iff every
    bus clears it.
    """
    if gamma_bar <= 0:
        raise GridError("gamma_bar must be positive")
    if n < 1:
        raise GridError("dimension must be at least 1")
    return budget.pi_tot / gamma_bar
