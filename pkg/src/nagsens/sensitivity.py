"""Equilibrium sensitivity to the exogenous parameters.

At a constrained equilibrium with a stable active set, the equilibrium map
``y -> x*(y)`` is differentiable and its Jacobian has the closed form

    d x* / d y  =  - M . dF/dy,
    M           =  L - L A^T (A L A^T)^{-1} A L,      L = (dF/dx)^{-1},

where ``A`` stacks the active inequality rows over all equality rows of the
product strategy set.  ``M`` is positive semidefinite in the quadratic-form
sense and annihilates the active normals (``A . dx*/dy = 0``: the perturbed
equilibrium slides inside the active face).

Regularity ("constraint qualification") is what makes the active set stable
under small parameter moves: every *genuinely binding* inequality must carry
a multiplier bounded away from zero, and the genuine rows must be linearly
independent.  Two representation artifacts are explicitly tolerated because
they do not affect the derivative (which depends on ``A`` only through its
row space):

- redundant equality rows (node-balance matrices of connected graphs always
  carry one dependent row per component), and
- active inequality rows implied by the equality block (a nonnegativity row
  duplicated by an equality pin on the same coordinate) — these are vacuous
  as constraints, so no multiplier condition is imposed on them.

The computation then runs on an independent row subset spanning the same row
space; the report keeps the raw stack and honest rank so callers can see
exactly what was pruned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConstraintQualificationError, IllConditionedError
from .model import GameSpec
from .solver import SolverConfig, _stacked_constraints, solve_nash

__all__ = [
    "ActiveSetReport",
    "SensitivityResult",
    "detect_active_set",
    "sensitivity_matrix",
    "finite_difference_oracle",
]


@dataclass(eq=False)
class ActiveSetReport:
    """Active constraints at an equilibrium and their regularity status.

    ``A`` stacks the active inequality rows (first ``n_active`` rows, in
    stacked-player order) over all equality rows; ``rhs`` is the matching
    right-hand side.  ``rank``/``full_row_rank`` describe the raw stack.
    ``implied_rows`` are inequality rows implied by the equality block
    (exempt from strict complementarity), ``offending_rows`` genuine active
    rows whose multiplier sits below the strictness threshold, and
    ``independent_rows`` the row subset (same row space) used for the
    sensitivity solve.  ``cq_ok`` is the verdict the sensitivity computation
    acts on.
    """

    A: np.ndarray
    rhs: np.ndarray
    n_active: int
    rank: int
    full_row_rank: bool
    strict_complementarity: bool
    offending_rows: list
    implied_rows: list
    independent_rows: list
    degenerate: bool
    cq_ok: bool
    active_rows: np.ndarray


def _implied_by_equalities(rows: np.ndarray, H: np.ndarray, tol: float = 1e-10):
    """Which of ``rows`` lie in the row space of ``H``."""
    if rows.shape[0] == 0 or H.shape[0] == 0:
        return np.zeros(rows.shape[0], dtype=bool)
    sol, *_ = np.linalg.lstsq(H.T, rows.T, rcond=None)
    resid = rows.T - H.T @ sol
    norms = np.linalg.norm(rows, axis=1)
    return np.linalg.norm(resid, axis=0) <= tol * np.maximum(norms, 1.0)


def _independent_equality_rows(H: np.ndarray, tol: float = 1e-10):
    """Indices of a maximal independent row subset of ``H`` (QR pivoting)."""
    if H.shape[0] == 0:
        return []
    r = np.linalg.matrix_rank(H)
    if r == H.shape[0]:
        return list(range(H.shape[0]))
    _, _, piv = scipy.linalg.qr(H.T, mode="economic", pivoting=True)
    return sorted(int(k) for k in piv[:r])


def detect_active_set(spec: GameSpec, result, config: SolverConfig | None = None) -> ActiveSetReport:
    """Classify the active constraints at an equilibrium.

    Parameters
    ----------
    spec : GameSpec
    result : EquilibriumResult
        Converged equilibrium (provides the point and the multipliers).
    config : SolverConfig, optional
        Supplies ``eps_active`` (activity window) and ``eps_strict``
        (multiplier strictness threshold).
    """
    cfg = config or SolverConfig()
    x = result.x_star.x
    B, b, H, h = _stacked_constraints(spec)
    act = np.nonzero(B @ x >= b - cfg.eps_active)[0] if B.shape[0] else np.zeros(0, dtype=int)
    B0 = B[act]
    A = np.vstack([B0, H])
    rhs = np.concatenate([b[act], h])
    q = A.shape[0]
    n_active = act.shape[0]
    rank = int(np.linalg.matrix_rank(A)) if q else 0
    implied_mask = _implied_by_equalities(B0, H)
    implied = [int(i) for i in np.nonzero(implied_mask)[0]]
    genuine = [int(i) for i in np.nonzero(~implied_mask)[0]]
    # strictness applies to genuinely binding rows only
    lam_act = result.lam[act] if n_active else np.zeros(0)
    offending = [i for i in genuine if lam_act[i] < cfg.eps_strict]
    strict = not offending
    # independence of the computational stack: genuine rows + equality basis
    eq_sel = _independent_equality_rows(H)
    stack = np.vstack([B0[genuine], H]) if genuine else H
    degenerate = False
    if stack.shape[0]:
        expected = len(genuine) + len(eq_sel)
        degenerate = int(np.linalg.matrix_rank(stack)) < expected
    independent = [int(i) for i in genuine] + [n_active + k for k in eq_sel]
    return ActiveSetReport(
        A=A,
        rhs=rhs,
        n_active=n_active,
        rank=rank,
        full_row_rank=bool(q == rank),
        strict_complementarity=bool(strict),
        offending_rows=offending,
        implied_rows=implied,
        independent_rows=independent,
        degenerate=bool(degenerate),
        cq_ok=bool(strict and not degenerate),
        active_rows=act,
    )


@dataclass(eq=False)
class SensitivityResult:
    """Equilibrium derivative and its building blocks.

    ``dx_dy`` has one column per parameter component; ``L`` is the inverse
    operator Jacobian at the equilibrium and ``M`` the constrained-response
    matrix ``L - L A^T (A L A^T)^{-1} A L`` restricted to the independent
    active rows.
    """

    dx_dy: np.ndarray
    L: np.ndarray
    M: np.ndarray
    report: ActiveSetReport


def sensitivity_matrix(
    spec: GameSpec,
    result,
    y,
    config: SolverConfig | None = None,
    cond_limit: float = 1e12,
) -> SensitivityResult:
    """Differentiate the equilibrium with respect to the parameters.

    Raises
    ------
    ConstraintQualificationError
        Strict complementarity fails on a genuinely binding row, or the
        genuine active rows are linearly dependent.  The offending report is
        attached — no silent answer.
    IllConditionedError
        The reduced system ``A L A^T`` has a condition estimate above
        ``cond_limit``.
    """
    y = spec._check_y(y)
    report = detect_active_set(spec, result, config)
    if not report.cq_ok:
        bits = []
        if report.offending_rows:
            bits.append(
                f"multipliers below eps_strict on active rows {report.offending_rows}"
            )
        if report.degenerate:
            bits.append("genuinely binding rows are linearly dependent")
        raise ConstraintQualificationError(
            "equilibrium derivative refused: " + "; ".join(bits), report=report
        )
    x = result.x_star.x
    Q = spec.operator_jacobian(x, y)
    lu = scipy.linalg.lu_factor(Q)
    L = scipy.linalg.lu_solve(lu, np.eye(Q.shape[0]))
    A = report.A[report.independent_rows]
    if A.shape[0]:
        G = scipy.linalg.lu_solve(lu, A.T)  # L A^T
        S = A @ G
        if np.linalg.cond(S) > cond_limit:
            raise IllConditionedError(
                f"reduced active-set system is numerically singular (cond > {cond_limit:.1e})"
            )
        M = L - G @ np.linalg.solve(S, A @ L)
    else:
        M = L
    dFdy = spec.parameter_jacobian(x, y)
    dx_dy = -M @ dFdy
    return SensitivityResult(dx_dy=dx_dy, L=L, M=M, report=report)


def finite_difference_oracle(
    spec: GameSpec,
    y,
    direction,
    h: float = 1e-3,
    config: SolverConfig | None = None,
    x0=None,
) -> np.ndarray:
    """Central-difference directional derivative of the equilibrium map.

    Re-solves the game at ``y ± h * direction`` and returns
    ``(x*(y + h d) - x*(y - h d)) / (2 h)``.  Pair a small ``h`` with a
    tight solver tolerance: the solve error enters the quotient divided by
    ``h``.
    """
    y = spec._check_y(y)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != y.shape:
        raise ValueError("direction must match the parameter shape")
    cfg = config or SolverConfig(tol_res=1e-11)
    hi = solve_nash(spec, y + h * direction, cfg, x0=x0)
    lo = solve_nash(spec, y - h * direction, cfg, x0=x0)
    return (hi.x_star.x - lo.x_star.x) / (2.0 * h)
