"""Scalar quadratic network games: walk-sum centralities and interventions.

Players minimize ``1/2 x^2 - f(z + y) x`` with scalar strategies, a
non-negative zero-diagonal influence matrix, and a saturating interaction
``f``.  Around the zero equilibrium everything is governed by the walk-sum
(Leontief) matrix ``L = (I - f'(0) W)^-1``:

- column sums of ``L`` are the Bonacich centralities (how far a shock at one
  player spreads),
- pinning a player's strategy removes the walks through them, which is the
  blocked centrality ``v^i_k = v^k L_ki / L_kk``,
- summing blocked centralities over shock locations gives the key-player
  score ``w^k`` used to pick an intervention target.

The same machinery specializes to stubborn-agent opinion dynamics
(:func:`fj_simulate`), whose fixed point is the Nash equilibrium of a
quadratic game with interaction slope ``1/(1+theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionError,
    ModelViolationError,
    NonConvergenceError,
    UnsupportedRegimeError,
    ValidationError,
)
from .model import (
    FriedkinJohnsenCost,
    GameSpec,
    Interaction,
    LinearInteraction,
    Network,
    PolyhedralSet,
    QuadraticShockCost,
)

__all__ = [
    "CentralityReport",
    "QuadraticGameSpec",
    "RumorReport",
    "TargetSelection",
    "blocked_centrality",
    "bonacich",
    "centrality_report",
    "fj_simulate",
    "fj_to_game",
    "fj_trajectory",
    "keyplayer",
    "leontief",
    "rumor_output",
    "rumor_pipeline",
    "select_target",
    "shock_sensitivity",
]


# ---------------------------------------------------------------------------
# walk-sum matrix and centralities


def _check_weights(weights) -> np.ndarray:
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"influence matrix must be square, got shape {W.shape}")
    if np.any(W < 0):
        raise ConfigurationError("influence weights must be non-negative")
    if np.any(np.abs(np.diag(W)) > 0):
        raise ConfigurationError("influence matrix must have zero diagonal (no self-influence)")
    return W


def leontief(weights, slope: float) -> np.ndarray:
    """Walk-sum matrix ``L = (I - slope * W)^-1``.

    Entry ``L[j, i]`` accumulates every path from player ``i`` to player
    ``j``, each discounted by ``slope`` per step, so it measures how a unit
    shock at ``i`` propagates to ``j``.  Economists know this as the Leontief
    matrix.

    Parameters
    ----------
    weights : (N, N) array_like
        Non-negative, zero-diagonal influence weights.
    slope : float
        Interaction slope at the operating point; ``slope * ||W||_2 < 1`` is
        required for the walk series to converge.
    """
    W = _check_weights(weights)
    norm = float(np.linalg.norm(W, 2)) if W.size else 0.0
    if slope < 0:
        raise ConfigurationError(f"interaction slope must be non-negative, got {slope}")
    if slope * norm >= 1.0:
        raise ConfigurationError(
            f"walk series diverges: slope * ||W||_2 = {slope * norm:.6g} >= 1"
        )
    return np.linalg.inv(np.eye(W.shape[0]) - slope * W)


def bonacich(L) -> np.ndarray:
    """Bonacich centralities: column sums of the walk-sum matrix."""
    return np.asarray(L, dtype=float).sum(axis=0)


def blocked_centrality(L) -> np.ndarray:
    """Matrix ``V`` with ``V[i, k]`` = the part of player ``i``'s influence
    that dies when player ``k`` is pinned: ``v^k * L[k, i] / L[k, k]``."""
    L = np.asarray(L, dtype=float)
    v = bonacich(L)
    return L.T * (v / np.diag(L))[None, :]


def keyplayer(L) -> np.ndarray:
    """Key-player (inter-)centralities ``w^k = v^k / L_kk * sum_i L_ki``.

    Combines outgoing influence (the Bonacich factor) with incoming
    exposure (the row sum), which is what makes it the right score for
    choosing whom to pin.
    """
    L = np.asarray(L, dtype=float)
    return bonacich(L) * L.sum(axis=1) / np.diag(L)


@dataclass(frozen=True)
class CentralityReport:
    """Walk-sum matrix and the three centrality vectors derived from it.

    Attributes
    ----------
    leontief : (N, N) ndarray
    bonacich : (N,) ndarray
        Column sums of ``leontief``.
    keyplayer : (N,) ndarray
    blocked : (N, N) ndarray
        ``blocked[i, k]`` is the influence of ``i`` intercepted by pinning
        ``k``; columns sum to ``keyplayer``.
    """

    leontief: np.ndarray
    bonacich: np.ndarray
    keyplayer: np.ndarray
    blocked: np.ndarray

    def __post_init__(self):
        L, v = self.leontief, self.bonacich
        if np.any(L < -1e-12) or np.any(np.diag(L) < 1 - 1e-12):
            raise ModelViolationError(
                "walk-sum matrix violates its sign structure (L >= 0, L_ii >= 1); "
                "check the influence weights and slope"
            )
        if np.any(v <= 0):
            raise ModelViolationError("Bonacich centralities must be positive")
        if np.any(self.blocked > v[:, None] + 1e-10):
            raise ModelViolationError("blocked centrality exceeds the unblocked one")


def centrality_report(weights, slope: float) -> CentralityReport:
    """Compute the full centrality bundle for an influence matrix."""
    L = leontief(weights, slope)
    return CentralityReport(
        leontief=L, bonacich=bonacich(L), keyplayer=keyplayer(L), blocked=blocked_centrality(L)
    )


# ---------------------------------------------------------------------------
# shock sensitivity with pinned players


def _pin_matrix(n: int, pinned) -> np.ndarray:
    if pinned is None:
        return np.zeros((0, n))
    A = np.asarray(pinned, dtype=float)
    if A.ndim == 2:
        return A
    idx = np.atleast_1d(np.asarray(pinned, dtype=int))
    A = np.zeros((idx.size, n))
    A[np.arange(idx.size), idx] = 1.0
    return A


def shock_sensitivity(L, slope: float, pinned=None) -> np.ndarray:
    """Equilibrium derivative ``d x*/d y`` at the zero equilibrium.

    With no pins this is ``slope * L``.  Pinning players (equality rows
    ``A x = 0``) removes the walks through them:

        ``slope * (L - L A^T (A L A^T)^-1 A L)``

    which for a single pinned player ``k`` reduces entrywise to
    ``slope * (L_ji - L_jk L_ki / L_kk)``.

    Parameters
    ----------
    L : (N, N) array_like
        Walk-sum matrix from :func:`leontief`.
    slope : float
        Interaction slope at the operating point.
    pinned : None, int, sequence of int, or (m, N) array_like
        Players held fixed at zero, or a full constraint matrix.
    """
    L = np.asarray(L, dtype=float)
    A = _pin_matrix(L.shape[0], pinned)
    if A.shape[0] == 0:
        return slope * L
    if A.shape[1] != L.shape[0]:
        raise DimensionError(f"pin matrix has {A.shape[1]} columns for {L.shape[0]} players")
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise ConfigurationError("pin rows are linearly dependent; drop the duplicates")
    G = L @ A.T
    S = A @ G
    return slope * (L - G @ np.linalg.solve(S, A @ L))


# ---------------------------------------------------------------------------
# game spec bridge


@dataclass(eq=False)
class QuadraticGameSpec:
    """A scalar quadratic network game around a saturating interaction.

    Parameters
    ----------
    weights : (N, N) array_like
        Non-negative zero-diagonal influence matrix.
    interaction : Interaction, optional
        Scalar response ``f`` with ``f(0) = 0``; defaults to the linear map
        with slope ``slope_bound``.
    slope_bound : float
        Uniform bound on ``f'`` with ``slope_bound * ||W||_2 < 1`` so the
        game operator is strongly monotone and walk sums converge.
    output_gain : float, optional
        First-order coefficient of the scalar output chain (slope of the
        output map times ``f'(0)``).  Defaults to ``f'(0)`` — an identity
        read-out.  Its sign decides whether shocks raise or lower the output.
    shock_mean : float
        Mean of the i.i.d. shocks, used by the ex-ante target selection.
    probe_grid : ndarray
        Points where ``0 <= f' <= slope_bound`` is checked at construction.
    """

    weights: np.ndarray
    interaction: Interaction | None = None
    slope_bound: float = 0.5
    output_gain: float | None = None
    shock_mean: float = 1.0
    probe_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 4.0, 33))

    def __post_init__(self):
        self.weights = _check_weights(self.weights)
        if self.interaction is None:
            self.interaction = LinearInteraction(self.slope_bound)
        norm = float(np.linalg.norm(self.weights, 2)) if self.weights.size else 0.0
        if not (self.slope_bound * norm < 1.0):
            raise ConfigurationError(
                f"slope_bound * ||W||_2 = {self.slope_bound * norm:.6g} must be < 1"
            )
        d = self.interaction.deriv(np.asarray(self.probe_grid, dtype=float))
        if np.any(d < -1e-12) or np.any(d > self.slope_bound + 1e-12):
            raise ModelViolationError(
                "interaction slope leaves [0, slope_bound] on the probe grid"
            )
        if self.output_gain is None:
            self.output_gain = self.slope_at_zero

    @property
    def n_players(self) -> int:
        return self.weights.shape[0]

    @property
    def slope_at_zero(self) -> float:
        return self.interaction.slope_at_zero

    @property
    def chain_gain(self) -> float:
        """Output slope past the interaction, ``output_gain / f'(0)``."""
        return self.output_gain / self.slope_at_zero

    def leontief(self) -> np.ndarray:
        return leontief(self.weights, self.slope_at_zero)

    def centrality(self) -> CentralityReport:
        return centrality_report(self.weights, self.slope_at_zero)

    def to_game(self, pinned=None) -> GameSpec:
        """Bridge to the generic game representation.

        Parameters
        ----------
        pinned : int or sequence of int, optional
            Players whose strategy is constrained to zero (an equality, so
            constraint qualification is never an issue).
        """
        pins = set()
        if pinned is not None:
            pins = {int(k) for k in np.atleast_1d(np.asarray(pinned, dtype=int))}
        sets = [
            PolyhedralSet.with_pins(1, {0: 0.0}) if i in pins else PolyhedralSet.unconstrained(1)
            for i in range(self.n_players)
        ]
        return GameSpec(
            network=Network(self.weights),
            cost=QuadraticShockCost(self.interaction),
            sets=sets,
        )


# ---------------------------------------------------------------------------
# intervention targeting


@dataclass(frozen=True)
class TargetSelection:
    """Which player to pin, with the scores that drove the choice."""

    index: int
    scores: np.ndarray
    mode: str
    tie: bool


def select_target(report: CentralityReport, mode: str = "ex_ante", shocks=None,
                  output_gain: float = 1.0, tie_tol: float = 1e-12) -> TargetSelection:
    """Pick the player whose pinning most reduces the expected output shift.

    ``ex_post`` scores each candidate by the realized shocks it would
    intercept (``sum_i blocked[i, k] * shocks[i]``); ``ex_ante`` commits
    before seeing the shocks and therefore ranks by key-player centrality.
    Both reduce the output shift only in the documented regime — positive
    output gain and non-negative shocks — and anything else is refused
    rather than silently argmaxed with the wrong sign.

    Ties are broken toward the lowest player index and flagged.
    """
    if output_gain <= 0:
        raise UnsupportedRegimeError(
            f"target selection assumes a positive output gain, got {output_gain}; "
            "for the mirrored regime flip the shock signs and the objective"
        )
    if mode == "ex_ante":
        scores = report.keyplayer.copy()
    elif mode == "ex_post":
        if shocks is None:
            raise ConfigurationError("ex_post selection needs the realized shocks")
        y = np.asarray(shocks, dtype=float)
        if y.shape != (report.blocked.shape[0],):
            raise DimensionError(f"expected {report.blocked.shape[0]} shocks, got shape {y.shape}")
        if np.any(y < 0):
            raise UnsupportedRegimeError(
                "target selection assumes non-negative shocks; got a negative entry"
            )
        scores = report.blocked.T @ y
    else:
        raise ConfigurationError(f"unknown selection mode {mode!r} (use 'ex_post' or 'ex_ante')")
    best = int(np.argmax(scores))
    tie = bool(np.sum(scores >= scores[best] - tie_tol) > 1)
    return TargetSelection(index=best, scores=scores, mode=mode, tie=tie)


# ---------------------------------------------------------------------------
# stubborn-agent opinion dynamics


def _check_opinion_inputs(P, theta, y):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError(f"trust matrix must be square, got shape {P.shape}")
    rows = P.sum(axis=1)
    problems = [f"row {i}: sum {rows[i]:.12g}"
                for i in np.nonzero(np.abs(rows - 1.0) > 1e-9)[0]]
    problems += [f"entry ({i},{j}): negative weight {P[i, j]:.6g}"
                 for i, j in np.argwhere(P < -1e-12)]
    if problems:
        raise ValidationError(problems, summary="trust matrix must be row stochastic")
    th = np.broadcast_to(np.asarray(theta, dtype=float), (P.shape[0],)).copy()
    if np.any(th <= 0):
        raise ConfigurationError("stubbornness must be positive")
    y = np.asarray(y, dtype=float)
    if y.shape != (P.shape[0],):
        raise DimensionError(f"expected {P.shape[0]} initial opinions, got shape {y.shape}")
    if np.any(y < 0) or np.any(y > 1):
        raise ValidationError(
            [f"agent {i}: {y[i]:.6g}" for i in np.nonzero((y < 0) | (y > 1))[0]],
            summary="initial opinions must lie in [0, 1]",
        )
    return P, th, y


def fj_trajectory(P, theta, y, steps: int) -> np.ndarray:
    """Opinion trajectory of the stubborn-agent averaging process.

    Row ``t`` is the opinion vector after ``t`` rounds of
    ``x <- (P x + theta * y) / (1 + theta)`` started from ``x = 0``.
    """
    P, th, y = _check_opinion_inputs(P, theta, y)
    out = np.zeros((steps + 1, P.shape[0]))
    for t in range(steps):
        out[t + 1] = (P @ out[t] + th * y) / (1.0 + th)
    return out


def fj_simulate(P, theta, y, tol: float = 1e-12, max_iter: int = 100000) -> np.ndarray:
    """Fixed point of the stubborn-agent averaging process.

    Iterates ``x <- (P x + theta * y) / (1 + theta)`` until successive
    iterates agree to ``tol`` (sup-norm).  The limit is the Nash equilibrium
    of the quadratic opinion game built by :func:`fj_to_game`.
    """
    P, th, y = _check_opinion_inputs(P, theta, y)
    x = np.zeros(P.shape[0])
    for it in range(max_iter):
        x_new = (P @ x + th * y) / (1.0 + th)
        if np.max(np.abs(x_new - x)) <= tol:
            return x_new
        x = x_new
    raise NonConvergenceError(
        f"opinion iteration still moving after {max_iter} rounds",
        residual=float(np.max(np.abs(x_new - x))),
        iterations=max_iter,
    )


def fj_to_game(P, theta: float, pinned=None) -> GameSpec:
    """Quadratic game whose Nash equilibrium is the opinion fixed point.

    The game's cost parameter is the *scaled* initial opinion
    ``theta * y`` — solve with ``solve_nash(game, theta * y)`` to match
    :func:`fj_simulate(P, theta, y)`.  ``theta`` must be uniform here; the
    simulator accepts per-agent stubbornness but the game bridge does not.
    """
    P = np.asarray(P, dtype=float)
    theta = float(theta)
    pins = set()
    if pinned is not None:
        pins = {int(k) for k in np.atleast_1d(np.asarray(pinned, dtype=int))}
    sets = [
        PolyhedralSet.with_pins(1, {0: 0.0}) if i in pins else PolyhedralSet.unconstrained(1)
        for i in range(P.shape[0])
    ]
    return GameSpec(network=Network(P), cost=FriedkinJohnsenCost(theta), sets=sets)


def fj_quadratic_spec(P, theta: float, shock_mean: float = 0.5) -> QuadraticGameSpec:
    """Centrality-ready view of the opinion game: slope ``1/(1+theta)``."""
    gamma = 1.0 / (1.0 + float(theta))
    return QuadraticGameSpec(
        weights=P,
        interaction=LinearInteraction(gamma),
        slope_bound=gamma,
        output_gain=gamma,
        shock_mean=shock_mean,
    )


# ---------------------------------------------------------------------------
# rumor spread


def rumor_output(x_star) -> float:
    """Aggregate spread: the sum of equilibrium strategies."""
    return float(np.sum(np.asarray(x_star, dtype=float)))


@dataclass(frozen=True)
class RumorReport:
    """Exact and first-order rumor spread, side by side.

    ``exact`` re-solves the (possibly pinned) game and applies the linear
    output chain; ``approx`` is the walk-sum estimate
    ``output_gain * sum_i (v^i - v^i_k) y^i``, whose error is quadratic in
    the shock size.
    """

    exact: float
    approx: float
    x_star: np.ndarray
    pinned: int | None
    gap: float


def rumor_pipeline(qspec: QuadraticGameSpec, y, pinned: int | None = None,
                   solver_config=None) -> RumorReport:
    """Quantify rumor spread under an optional pinned player.

    Parameters
    ----------
    qspec : QuadraticGameSpec
    y : (N,) array_like
        Shocks, in the game's own parameter scale (for the opinion game that
        is ``theta * initial_opinion``).
    pinned : int, optional
        Player held at zero — the intervention whose effect the report
        isolates.
    """
    from .solver import solve_nash  # local import: avoid a cycle at module load

    y = np.asarray(y, dtype=float)
    if y.shape != (qspec.n_players,):
        raise DimensionError(f"expected {qspec.n_players} shocks, got shape {y.shape}")
    game = qspec.to_game(pinned=pinned)
    res = solve_nash(game, y, config=solver_config)
    exact = qspec.chain_gain * rumor_output(res.x_star.x)
    rep = qspec.centrality()
    if pinned is None:
        approx = float(qspec.output_gain * (rep.bonacich @ y))
    else:
        approx = float(qspec.output_gain * ((rep.bonacich - rep.blocked[:, pinned]) @ y))
    return RumorReport(
        exact=exact,
        approx=approx,
        x_star=res.x_star.x.copy(),
        pinned=pinned,
        gap=abs(exact - approx),
    )
