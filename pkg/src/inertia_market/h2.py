"""Squared H2 performance metric of the marginally stable grid dynamics.

Three routes are provided and cross-validated against each other:

* ``h2_norm_sq_gramian``: exact value trace(B' P B) for a generic output,
  with P the observability Gramian made unique by the constraint
  P @ [1; 0] = 0 (the drift mode carries no output energy).
* ``h2_primary_effort_closed``: the closed form sum(pi_i / (kappa m_i))
  for the droop-effort output C = [0, D^(1/2)]. Substituting
  P = blkdiag(L/2, M/2) into the Lyapunov equation shows the Gramian value
  is sum(pi_i / (2 m_i)); ``kappa`` selects between that normalization
  (kappa=2) and the convention used by the planning and market layers
  (kappa=1). The factor is a pure rescaling of the disturbance budget and
  never changes allocations.
* ``upper_bound_ub`` / ``upper_bound_worst``: a bound convex in m for
  block-partitioned output weights, finite even where the exact metric is
  non-convex in m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, solve_continuous_lyapunov

from .errors import GridError, NumericsError
from .grid import Grid, StateSpace, drift_mode, laplacian

__all__ = [
    "GramianSolution",
    "solve_constrained_lyapunov",
    "h2_norm_sq_gramian",
    "h2_primary_effort_closed",
    "upper_bound_ub",
    "upper_bound_worst",
]

# Dense deflated solves stay exact and fast up to this state dimension.
MAX_STATE_DIM = 64


@dataclass(frozen=True)
class GramianSolution:
    """Constrained observability Gramian with its achieved residuals.

    ``residual`` is the Frobenius norm of P A + A' P + Q, to be judged
    against 1e-8 * (||Q|| + ||P|| ||A||); ``constraint_residual`` is
    ||P @ [1; 0]||, to be judged against 1e-8 * ||P||.
    """

    P: np.ndarray
    residual: float
    constraint_residual: float


def _check_spectrum(A: np.ndarray, n: int) -> None:
    # Solvability needs one structural zero eigenvalue, the rest strictly stable.
    eigs = np.linalg.eigvals(A)
    scale = max(np.linalg.norm(A), 1.0)
    loose = [k for k, lam in enumerate(eigs) if lam.real > -1e-9]
    if len(loose) == 0:
        raise NumericsError("system has no drift mode; expected A @ [1; 0] = 0")
    if len(loose) > 1:
        detail = ", ".join(f"eig[{k}]={eigs[k]:.3e}" for k in loose)
        raise NumericsError(
            f"A has {len(loose)} modes with real part > -1e-9; only the drift "
            f"mode may be marginally stable ({detail})"
        )
    lam0 = eigs[loose[0]]
    if abs(lam0) > 1e-7 * scale:
        raise NumericsError(
            f"the single non-Hurwitz eigenvalue {lam0:.3e} is not a zero mode"
        )


def solve_constrained_lyapunov(A, Q) -> GramianSolution:
    """Solve P A + A' P + Q = 0 subject to P @ [1; 0] = 0.

    The homogeneous equation admits a one-parameter rank-one family, so the
    plain Lyapunov equation is underdetermined here; the constraint picks
    the representative with no energy on the drift mode. The solve deflates
    the drift direction with an orthonormal basis of its complement and
    solves the reduced dense Lyapunov equation, which has a unique solution
    because the reduced matrix is Hurwitz.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise GridError(f"A must be square with even dimension, got {A.shape}")
    if A.shape[0] > MAX_STATE_DIM:
        raise GridError(f"state dimension {A.shape[0]} exceeds supported {MAX_STATE_DIM}")
    if Q.shape != A.shape:
        raise GridError(f"Q has shape {Q.shape}, expected {A.shape}")
    n = A.shape[0] // 2
    v0 = drift_mode(n)

    q_scale = np.linalg.norm(Q)
    if np.linalg.norm(Q - Q.T) > 1e-10 * max(q_scale, 1e-300):
        raise GridError("Q must be symmetric")
    Q = 0.5 * (Q + Q.T)
    if q_scale > 0:
        if np.min(np.linalg.eigvalsh(Q)) < -1e-10 * q_scale:
            raise GridError("Q must be positive semidefinite")
        if np.linalg.norm(Q @ v0) > 1e-9 * q_scale:
            raise GridError("Q must annihilate the drift mode [1; 0]")

    _check_spectrum(A, n)

    if q_scale == 0.0:
        P = np.zeros_like(A)
        return GramianSolution(P=P, residual=0.0, constraint_residual=0.0)

    # Basis of the complement of span{[1; 0]}: angle directions orthogonal
    # to the uniform shift, plus all frequency directions.
    W = null_space(np.ones((1, n)))
    U = np.zeros((2 * n, 2 * n - 1))
    U[:n, : n - 1] = W
    U[n:, n - 1 :] = np.eye(n)

    A_red = U.T @ A @ U
    Q_red = U.T @ Q @ U
    X = solve_continuous_lyapunov(A_red.T, -Q_red)
    X = 0.5 * (X + X.T)
    P = U @ X @ U.T
    P = 0.5 * (P + P.T)

    residual = float(np.linalg.norm(P @ A + A.T @ P + Q))
    constraint_residual = float(np.linalg.norm(P @ v0))
    return GramianSolution(P=P, residual=residual, constraint_residual=constraint_residual)


def h2_norm_sq_gramian(sys: StateSpace) -> float:
    """Exact squared H2 norm trace(B' P B) via the constrained Gramian."""
    Q = sys.C.T @ sys.C
    sol = solve_constrained_lyapunov(sys.A, Q)
    value = float(np.trace(sys.B.T @ sol.P @ sys.B))
    return max(value, 0.0)


def h2_primary_effort_closed(m, pi, kappa=1) -> float:
    """Closed-form droop-effort metric sum_i pi_i / (kappa * m_i).

    Linear in ``pi``, convex and strictly decreasing in each m_i with
    positive pi_i. ``kappa=2`` matches the Gramian value exactly; the
    default ``kappa=1`` is the convention consumed by the planner and the
    market, where the factor folds into the disturbance budget.
    """
    if kappa not in (1, 2):
        raise ValueError(f"kappa must be 1 or 2, got {kappa!r}")
    m = np.asarray(m, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if np.any(m <= 0):
        raise GridError("inertia entries must be positive")
    if pi.shape != m.shape:
        raise GridError(f"pi has shape {pi.shape}, expected {m.shape}")
    if np.any(pi < 0):
        raise GridError("disturbance strengths must be nonnegative")
    return float(np.sum(pi * (1.0 / (kappa * m))))


def _split_block_weight(Q, n: int):
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (2 * n, 2 * n):
        raise GridError(f"Q has shape {Q.shape}, expected ({2 * n}, {2 * n})")
    Q1 = Q[:n, :n]
    Q2_blk = Q[n:, n:]
    scale = max(np.linalg.norm(Q), 1e-300)
    if np.linalg.norm(Q[:n, n:]) > 1e-10 * scale or np.linalg.norm(Q[n:, :n]) > 1e-10 * scale:
        raise GridError("Q must be block-diagonal across the angle/frequency split")
    if np.linalg.norm(Q2_blk - np.diag(np.diag(Q2_blk))) > 1e-10 * scale:
        raise GridError("frequency block of Q must be diagonal")
    Q2 = np.diag(Q2_blk).copy()
    if np.any(Q2 < -1e-12 * scale):
        raise GridError("frequency weights must be nonnegative")
    Q2 = np.clip(Q2, 0.0, None)
    if np.min(np.linalg.eigvalsh(0.5 * (Q1 + Q1.T))) < -1e-10 * scale:
        raise GridError("angle block of Q must be positive semidefinite")
    return Q1, Q2


def upper_bound_ub(m, grid: Grid, Q) -> float:
    """Convex-in-m upper bound for block weights Q = blkdiag(Q1, diag(Q2)).

    Returns (trace(pinv(L) Q1) + sum_i Q2_i / m_i) / (2 min_i d_i). Scaled
    by the largest disturbance strength it dominates the exact metric; it
    is finite and convex in m even when the exact metric is not.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (grid.n,):
        raise GridError(f"inertia vector has shape {m.shape}, expected ({grid.n},)")
    if np.any(m <= 0):
        raise GridError("inertia entries must be positive")
    Q1, Q2 = _split_block_weight(Q, grid.n)
    d_min = float(np.min(grid.d))
    L_pinv = np.linalg.pinv(laplacian(grid))
    angle_term = float(np.trace(L_pinv @ Q1))
    freq_term = float(np.sum(Q2 / m))
    return (angle_term + freq_term) / (2.0 * d_min)


def upper_bound_worst(m, grid: Grid, Q, pi_tot: float) -> float:
    """Worst-case bound over the budget polytope: pi_tot * upper_bound_ub."""
    if pi_tot < 0:
        raise GridError("disturbance budget must be nonnegative")
    return pi_tot * upper_bound_ub(m, grid, Q)
