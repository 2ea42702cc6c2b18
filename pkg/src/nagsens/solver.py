"""Equilibrium solver for constrained network aggregative games.

The Nash equilibria of the game coincide with the fixed points of the
projected-gradient map

    x  ->  project_X( x - tau * F(x, y) ),

where the projection splits across players because the joint strategy set is
a product of per-player polyhedra.  The solver iterates exactly that map with
a constant step:

- when the operator Jacobian is symmetric (potential games, e.g. routing with
  affine congestion) the step ``2 / (alpha + ell)`` of gradient descent
  applies and gives the classic ``(kappa-1)/(kappa+1)`` contraction;
- otherwise the strongly-monotone step ``alpha / ell**2`` is used;
- with no positive curvature margin available the solver falls back to
  ``1 / ell`` with residual-driven backtracking.

``alpha`` (a strong-monotonicity margin) and ``ell`` (a Lipschitz bound) are
measured from the operator Jacobian at the starting point, plus a few sampled
points when the model's curvature is state dependent.

Projections are solved by a small dense active-set method specialized to the
identity Hessian; the affine solve for every visited working set is cached as
a precomputed map, so in the steady state one projection costs two small
mat-vecs.  The working set of each player is warm-started across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionError,
    ModelViolationError,
    NonConvergenceError,
    StepTooLargeError,
)
from .model import GameSpec, PolyhedralSet, StrategyProfile

__all__ = [
    "SolverConfig",
    "EquilibriumResult",
    "project",
    "solve_nash",
    "recover_multipliers",
]

_EMPTY = frozenset()


@dataclass
class SolverConfig:
    """Tunables for :func:`solve_nash`.

    ``step=None`` lets the solver derive the step size from measured
    curvature; a user-pinned step disables backtracking (blow-ups then raise
    :class:`StepTooLargeError` instead of shrinking the step).
    """

    step: float | None = None
    tol_res: float = 1e-9
    max_iter: int = 200_000
    eps_active: float = 1e-7
    eps_strict: float = 1e-7
    seed: int = 0
    track_residuals: bool = False

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ConfigurationError("step must be positive")
        if self.tol_res <= 0:
            raise ConfigurationError("tol_res must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.eps_active <= 0 or self.eps_strict <= 0:
            raise ConfigurationError("active-set tolerances must be positive")
        if self.eps_strict < self.tol_res:
            raise ConfigurationError(
                "eps_strict below tol_res cannot separate multiplier noise from zero"
            )


@dataclass(eq=False)
class EquilibriumResult:
    """Converged equilibrium with KKT data.

    ``lam`` covers every stacked inequality row (zeros off the active set),
    ``mu`` every stacked equality row; ``active_rows`` indexes the stacked
    inequality block.  ``stationarity_residual`` is the max-norm defect of
    ``F + B^T lam + H^T mu``.
    """

    x_star: StrategyProfile
    lam: np.ndarray
    mu: np.ndarray
    residual: float
    iterations: int
    active_rows: np.ndarray
    stationarity_residual: float
    multipliers_unique: bool
    step: float
    step_diagnostics: dict | None = None
    residual_history: np.ndarray | None = None


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


class _Projector:
    """Euclidean projection onto one polyhedron, with working-set caching."""

    def __init__(self, pset: PolyhedralSet):
        self.pset = pset
        self.B = pset.B
        self.b = pset.b
        self.H = pset.H
        self.h = pset.h
        self.m = pset.n_inequalities
        self.p = pset.n_equalities
        self.dim = pset.dim
        self._maps: dict = {}
        if self.m == 0 and self.p == 0:
            self.kind = "free"
        elif self.m == 0:
            self.kind = "affine"
        else:
            self.kind = "general"
        self._maxit = 3 * (self.m + self.p) + 30

    def _map(self, key: frozenset):
        """Affine solve data for working set ``key`` (inequality row ids)."""
        entry = self._maps.get(key)
        if entry is None:
            rows = sorted(key)
            A_W = np.vstack([self.B[rows], self.H]) if rows else self.H
            rhs = np.concatenate([self.b[rows], self.h]) if rows else self.h
            if A_W.shape[0] == 0:
                M = np.eye(self.dim)
                q = np.zeros(self.dim)
                pinvG = np.zeros((0, 0))
            else:
                pinvG = np.linalg.pinv(A_W @ A_W.T, rcond=1e-12)
                M = np.eye(self.dim) - A_W.T @ pinvG @ A_W
                q = A_W.T @ (pinvG @ rhs)
            entry = (M, q, A_W, pinvG, rhs, rows)
            self._maps[key] = entry
        return entry

    def __call__(self, v, x_start=None, warm: frozenset = _EMPTY):
        """Project ``v``; returns ``(x, working_set)``.

        ``x_start`` must be feasible when given (the previous projection
        output in the solver loop); without it the projector bootstraps via
        the equality-only solve or a phase-I point.
        """
        v = np.asarray(v, dtype=float)
        if self.kind == "free":
            return v, _EMPTY
        M0, q0, *_ = self._map(_EMPTY)
        if self.kind == "affine":
            return M0 @ v + q0, _EMPTY
        scale = max(1.0, np.abs(v).max(), np.abs(self.b).max(initial=0.0))
        feas_tol = 1e-11 * scale
        if x_start is None:
            x_aff = M0 @ v + q0
            if np.all(self.B @ x_aff <= self.b + feas_tol):
                return x_aff, _EMPTY
            x_cur = self.pset.strictly_feasible_point().copy()
            W = set()
        else:
            x_cur = np.asarray(x_start, dtype=float)
            W = set(warm)
        for _ in range(self._maxit):
            key = frozenset(W)
            M, q, A_W, pinvG, rhs, rows = self._map(key)
            x_new = M @ v + q
            # violation check over rows outside the working set
            viol_row = -1
            if self.m:
                resid = self.B @ x_new - self.b
                if W:
                    resid[list(W)] = -np.inf
                viol_row = int(np.argmax(resid))
                if resid[viol_row] <= feas_tol:
                    viol_row = -1
            if viol_row < 0:
                if not W:
                    return x_new, key
                eta = pinvG @ (A_W @ v - rhs)
                lam_W = eta[: len(rows)]
                k = int(np.argmin(lam_W))
                if lam_W[k] >= -feas_tol:
                    return x_new, key
                W.discard(rows[k])
                x_cur = x_new
                continue
            # blocking step from the feasible x_cur toward x_new
            d = x_new - x_cur
            Bd = self.B @ d
            slack = self.b - self.B @ x_cur
            t = 1.0
            k_block = -1
            for k in range(self.m):
                if k in W or Bd[k] <= feas_tol:
                    continue
                tk = slack[k] / Bd[k]
                if tk < t:
                    t = tk
                    k_block = k
            if k_block < 0:
                # numerical corner: the violated row was not crossed; accept
                x_cur = x_new
                continue
            t = max(t, 0.0)
            x_cur = x_cur + t * d
            W.add(k_block)
        raise NonConvergenceError(
            "active-set projection cycled beyond its iteration cap",
            iterations=self._maxit,
        )


def project(pset: PolyhedralSet, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto a polyhedral set.

    Solves ``min ||x - v||`` over ``{B x <= b, H x = h}`` with a dense
    active-set method.  Raises :class:`InfeasibleSetError` when the set is
    empty.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (pset.dim,):
        raise DimensionError(f"point has shape {v.shape}, set has dim {pset.dim}")
    x, _ = _Projector(pset)(v)
    return x


# ---------------------------------------------------------------------------
# step selection
# ---------------------------------------------------------------------------


def _spectral_bounds(Q):
    sym = 0.5 * (Q + Q.T)
    alpha = float(np.linalg.eigvalsh(sym).min())
    ell = float(np.linalg.norm(Q, 2))
    is_sym = np.abs(Q - Q.T).max() <= 1e-10 * max(1.0, np.abs(Q).max())
    return alpha, ell, bool(is_sym)


def _auto_step(spec: GameSpec, x, y, cfg: SolverConfig, projectors):
    """Measure (alpha, ell) from the operator Jacobian and pick the step."""
    alpha, ell, is_sym = _spectral_bounds(spec.operator_jacobian(x, y))
    samples = 1
    if not spec.cost.constant_curvature:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(4):
            probe = x + rng.standard_normal(x.shape) * (1.0 + np.abs(x))
            blocks = [
                projectors[i](probe[i * spec.n : (i + 1) * spec.n])[0]
                for i in range(spec.n_players)
            ]
            a, l, s = _spectral_bounds(spec.operator_jacobian(np.concatenate(blocks), y))
            alpha = min(alpha, a)
            ell = max(ell, l)
            is_sym = is_sym and s
            samples += 1
        ell *= 1.25  # safety on a sampled Lipschitz estimate
    if ell <= 0:
        raise ModelViolationError("operator Jacobian vanished; the game has no curvature")
    if alpha > 0:
        tau = 2.0 / (alpha + ell) if is_sym else alpha / ell**2
        certified = True
    else:
        tau = 1.0 / ell
        certified = False
    diag = {
        "alpha": alpha,
        "ell": ell,
        "symmetric": is_sym,
        "certified": certified,
        "samples": samples,
    }
    return tau, diag


# ---------------------------------------------------------------------------
# multiplier recovery
# ---------------------------------------------------------------------------


def _stacked_rows(spec: GameSpec):
    """Global row offsets of the stacked inequality / equality blocks."""
    m_off = np.cumsum([0] + [s.n_inequalities for s in spec.sets])
    p_off = np.cumsum([0] + [s.n_equalities for s in spec.sets])
    return m_off, p_off


def _active_inequalities(spec: GameSpec, x, eps_active):
    """Global indices (stacked order) of inequality rows active at ``x``."""
    m_off, _ = _stacked_rows(spec)
    idx = []
    for i, s in enumerate(spec.sets):
        if s.n_inequalities == 0:
            continue
        xi = spec.block(x, i)
        hit = np.nonzero(s.B @ xi >= s.b - eps_active)[0]
        idx.extend(int(m_off[i] + k) for k in hit)
    return np.asarray(idx, dtype=int)


def _stacked_constraints(spec: GameSpec):
    """Block-diagonal stacked ``(B, b, H, h)`` over all players."""
    dim = spec.dim
    n = spec.n
    m_total = sum(s.n_inequalities for s in spec.sets)
    p_total = sum(s.n_equalities for s in spec.sets)
    B = np.zeros((m_total, dim))
    b = np.zeros(m_total)
    H = np.zeros((p_total, dim))
    h = np.zeros(p_total)
    m_off, p_off = _stacked_rows(spec)
    for i, s in enumerate(spec.sets):
        cols = slice(i * n, (i + 1) * n)
        if s.n_inequalities:
            B[m_off[i] : m_off[i + 1], cols] = s.B
            b[m_off[i] : m_off[i + 1]] = s.b
        if s.n_equalities:
            H[p_off[i] : p_off[i + 1], cols] = s.H
            h[p_off[i] : p_off[i + 1]] = s.h
    return B, b, H, h


def _recover(spec: GameSpec, x, y, cfg: SolverConfig):
    from scipy.optimize import lsq_linear

    F = spec.game_operator(x, y)
    B, b, H, h = _stacked_constraints(spec)
    act = _active_inequalities(spec, x, cfg.eps_active)
    A = np.vstack([B[act], H])
    q = A.shape[0]
    lam = np.zeros(B.shape[0])
    mu = np.zeros(H.shape[0])
    if q == 0:
        stat = float(np.abs(F).max(initial=0.0))
        return lam, mu, act, stat, True
    n_act = act.shape[0]
    lb = np.concatenate([np.zeros(n_act), np.full(H.shape[0], -np.inf)])
    # rank-deficient duals (duplicated active rows at corners) make the
    # reflective solver form 0*inf internally; the stationarity residual
    # below is the actual acceptance check for the recovered multipliers
    with np.errstate(invalid="ignore"):
        res = lsq_linear(A.T, -F, bounds=(lb, np.full(q, np.inf)), tol=1e-14)
    eta = res.x
    lam[act] = np.maximum(eta[:n_act], 0.0)
    mu[:] = eta[n_act:]
    stat = float(np.abs(A.T @ eta + F).max(initial=0.0))
    unique = bool(np.linalg.matrix_rank(A) == q) if q else True
    return lam, mu, act, stat, unique


def recover_multipliers(spec: GameSpec, x_star, y, config: SolverConfig | None = None):
    """KKT multipliers at an equilibrium.

    Solves the stationarity system ``F + B^T lam + H^T mu = 0`` in the
    least-squares sense over the active inequality rows (all equality rows
    always participate), with ``lam >= 0`` enforced so that duplicated
    pin/bound pairs cannot push an inequality multiplier negative.

    Returns
    -------
    (lam, mu) : ndarrays over the stacked inequality / equality rows.
    """
    cfg = config or SolverConfig()
    x = spec._check_x(np.asarray(x_star.x if isinstance(x_star, StrategyProfile) else x_star))
    y = spec._check_y(y)
    lam, mu, _, _, _ = _recover(spec, x, y, cfg)
    return lam, mu


# ---------------------------------------------------------------------------
# main solve loop
# ---------------------------------------------------------------------------


def solve_nash(
    spec: GameSpec,
    y,
    config: SolverConfig | None = None,
    x0=None,
) -> EquilibriumResult:
    """Compute the Nash equilibrium of a monotone game.

    Runs the projected-gradient fixed-point iteration with per-player
    warm-started active-set projections.  Convergence is declared when the
    step-normalized displacement ``||x - project(x - tau F)|| / tau`` falls
    below ``config.tol_res``.

    Parameters
    ----------
    spec : GameSpec
    y : ndarray
        Exogenous parameter (stacked per player, or the shared vector).
    config : SolverConfig, optional
    x0 : ndarray, optional
        Starting profile; projected onto the strategy sets before use.

    Raises
    ------
    NonConvergenceError
        Iteration budget exhausted (the last residual is attached).
    StepTooLargeError
        Residual blow-up (x 1e6) under a user-pinned step.
    ModelViolationError
        A player's own-strategy Hessian fails positive definiteness at the
        starting point.
    """
    cfg = config or SolverConfig()
    y = spec._check_y(y)
    N, n = spec.n_players, spec.n
    projectors = [_Projector(s) for s in spec.sets]

    start = np.zeros(spec.dim) if x0 is None else spec._check_x(np.asarray(x0, dtype=float))
    blocks = []
    warms = []
    for i in range(N):
        xi, Wi = projectors[i](start[i * n : (i + 1) * n])
        blocks.append(xi)
        warms.append(Wi)
    x = np.concatenate(blocks)

    spec.check_convexity(x, y)

    if cfg.step is not None:
        tau = cfg.step
        diag = {"certified": None, "source": "user"}
        pinned = True
    else:
        tau, diag = _auto_step(spec, x, y, cfg, projectors)
        pinned = False

    best_res = np.inf
    best_x = x
    best_iter = 0
    halvings = 0
    history = [] if cfg.track_residuals else None
    patience = max(200, cfg.max_iter // 20)

    x_new = np.empty_like(x)
    it = 0
    converged = False
    res = np.inf
    while it < cfg.max_iter:
        it += 1
        F = spec.game_operator(x, y)
        v = x - tau * F
        for i in range(N):
            xi, warms[i] = projectors[i](
                v[i * n : (i + 1) * n], x_start=x[i * n : (i + 1) * n], warm=warms[i]
            )
            x_new[i * n : (i + 1) * n] = xi
        res = float(np.linalg.norm(x - x_new) / tau)
        if history is not None:
            history.append(res)
        if res <= cfg.tol_res:
            x = x_new.copy()
            converged = True
            break
        if res < best_res:
            best_res = res
            best_x = x_new.copy()
            best_iter = it
        blowup = res > 1e6 * max(best_res, cfg.tol_res)
        stalled = (not diag.get("certified", False)) and (it - best_iter > patience)
        if blowup or stalled:
            if pinned:
                raise StepTooLargeError(
                    f"residual grew to {res:.3e} (best {best_res:.3e}) with pinned step {tau:.3e}"
                )
            halvings += 1
            if halvings > 40:
                raise NonConvergenceError(
                    "step halving exhausted without convergence",
                    residual=best_res,
                    iterations=it,
                )
            tau *= 0.5
            x = best_x.copy()
            best_iter = it
            continue
        x, x_new = x_new, x
    if not converged:
        raise NonConvergenceError(
            f"no fixed point within {cfg.max_iter} iterations (residual {res:.3e})",
            residual=res,
            iterations=cfg.max_iter,
        )

    lam, mu, act, stat, unique = _recover(spec, x, y, cfg)
    return EquilibriumResult(
        x_star=spec.profile(x),
        lam=lam,
        mu=mu,
        residual=res,
        iterations=it,
        active_rows=act,
        stationarity_residual=stat,
        multipliers_unique=unique,
        step=tau,
        step_diagnostics=diag,
        residual_history=np.asarray(history) if history is not None else None,
    )
