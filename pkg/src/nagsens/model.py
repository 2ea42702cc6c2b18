"""Core objects for constrained network aggregative games.

A game has ``N`` players, each choosing a strategy ``x_i`` in ``R^n`` subject
to a polyhedral constraint set.  Player ``i`` reacts to the rest of the
population only through its neighbor aggregate

    z_i(x) = sum_j  W[i, j] * x_j,

where ``W`` is a nonnegative interaction matrix, and minimizes a cost
``J_i(x_i, z_i, y_i)`` that also depends on an exogenous parameter ``y_i``.
Stacking the partial gradients of the costs gives the game operator

    F(x, y) = [ grad_{x_i} J_i(x_i, z_i(x), y_i) ]_{i=1..N},

whose variational inequality over the product constraint set characterizes
the Nash equilibria of the game.  Everything downstream (solver, monotonicity
certificates, equilibrium sensitivities) is phrased in terms of ``F`` and its
Jacobians, which this module assembles from per-player cost derivatives:

    d F / d x = D + K (W kron I_n),   D = blkdiag(hess_i),  K = blkdiag(cross_i).

Cost models report the derivatives of their *gradient map* at a frozen
aggregate, so the identity above holds verbatim even for games where a
player's own strategy enters its aggregate (nonzero interaction diagonal,
see :class:`AffineRoutingCost`).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleSetError, ModelViolationError

__all__ = [
    "Network",
    "PolyhedralSet",
    "StrategyProfile",
    "ParametricCostModel",
    "Interaction",
    "LinearInteraction",
    "QuadraticShockCost",
    "FriedkinJohnsenCost",
    "AffineRoutingCost",
    "GameSpec",
]


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d array, got shape {a.shape}")
    return a


def _as_vector(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d array, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# interaction network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Network:
    """Weighted interaction structure of the game.

    Parameters
    ----------
    weights : (N, N) ndarray
        Nonnegative interaction weights; ``weights[i, j]`` scales how much
        player ``j``'s strategy contributes to player ``i``'s aggregate.
    allow_self_loops : bool, optional
        Permit nonzero diagonal entries.  Off by default: in the standard
        aggregative setting a player never reacts to itself.  Routing-style
        games switch this on because the own flow enters the edge loads.
    """

    weights: np.ndarray
    allow_self_loops: bool = False

    def __post_init__(self):
        W = _as_matrix(self.weights, "weights")
        if W.shape[0] != W.shape[1]:
            raise DimensionError(f"weights must be square, got shape {W.shape}")
        if W.shape[0] < 1:
            raise DimensionError("need at least one player")
        if np.any(W < 0):
            raise ModelViolationError("interaction weights must be nonnegative")
        if not self.allow_self_loops and np.any(np.diag(W) != 0):
            raise ModelViolationError(
                "interaction diagonal must be zero unless allow_self_loops is set"
            )
        object.__setattr__(self, "weights", W)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        W = self.weights
        scale = np.abs(W).max() or 1.0
        return bool(np.abs(W - W.T).max() <= rtol * scale)


# ---------------------------------------------------------------------------
# polyhedral strategy sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolyhedralSet:
    """Strategy set ``{x : B x <= b, H x = h}`` in ``R^dim``.

    Either block may be empty.  Feasibility is *not* asserted at
    construction; call :meth:`strictly_feasible_point` for an on-demand
    check (it caches its answer).
    """

    dim: int
    B: np.ndarray = None
    b: np.ndarray = None
    H: np.ndarray = None
    h: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dim must be positive")
        B = np.zeros((0, self.dim)) if self.B is None else _as_matrix(self.B, "B")
        b = np.zeros(0) if self.b is None else _as_vector(self.b, "b")
        H = np.zeros((0, self.dim)) if self.H is None else _as_matrix(self.H, "H")
        h = np.zeros(0) if self.h is None else _as_vector(self.h, "h")
        if B.shape != (b.shape[0], self.dim):
            raise DimensionError(
                f"inequality block mismatch: B is {B.shape}, b has {b.shape[0]} rows, dim={self.dim}"
            )
        if H.shape != (h.shape[0], self.dim):
            raise DimensionError(
                f"equality block mismatch: H is {H.shape}, h has {h.shape[0]} rows, dim={self.dim}"
            )
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    # -- constructors -------------------------------------------------------

    @classmethod
    def unconstrained(cls, dim: int) -> "PolyhedralSet":
        return cls(dim=dim)

    @classmethod
    def nonnegative(cls, dim: int) -> "PolyhedralSet":
        """The nonnegative orthant ``x >= 0``."""
        return cls(dim=dim, B=-np.eye(dim), b=np.zeros(dim))

    @classmethod
    def with_pins(cls, dim: int, pins: dict) -> "PolyhedralSet":
        """Equality-pin selected coordinates: ``x[k] = value`` for each item."""
        if not pins:
            return cls.unconstrained(dim)
        idx = sorted(pins)
        H = np.zeros((len(idx), dim))
        h = np.zeros(len(idx))
        for r, k in enumerate(idx):
            if not 0 <= k < dim:
                raise DimensionError(f"pin index {k} out of range for dim {dim}")
            H[r, k] = 1.0
            h[r] = pins[k]
        return cls(dim=dim, H=H, h=h)

    # -- queries ------------------------------------------------------------

    @property
    def n_inequalities(self) -> int:
        return self.B.shape[0]

    @property
    def n_equalities(self) -> int:
        return self.H.shape[0]

    def is_unconstrained(self) -> bool:
        return self.n_inequalities == 0 and self.n_equalities == 0

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _as_vector(x, "x")
        if x.shape[0] != self.dim:
            raise DimensionError(f"point has dim {x.shape[0]}, set has dim {self.dim}")
        ok_ineq = self.n_inequalities == 0 or np.all(self.B @ x <= self.b + tol)
        ok_eq = self.n_equalities == 0 or np.max(np.abs(self.H @ x - self.h), initial=0.0) <= tol
        return bool(ok_ineq and ok_eq)

    def strictly_feasible_point(self) -> np.ndarray:
        """Return a point with maximal inequality slack, or raise.

        Solves the phase-I linear program ``max t  s.t.  Bx + t <= b,
        Hx = h`` and raises :class:`InfeasibleSetError` (with the LP's dual
        vector as a Farkas-style certificate when available) if the set is
        empty.  Interior existence (``t > 0``) is recorded on the result via
        the cached ``strict`` flag.
        """
        if "feasible" in self._cache:
            return self._cache["feasible"]
        if self.is_unconstrained():
            x = np.zeros(self.dim)
            self._cache.update(feasible=x, strict=True)
            return x
        from scipy.optimize import linprog

        m = self.n_inequalities
        # variables: (x, t); maximize t with t capped at 1 to keep the LP bounded
        c = np.zeros(self.dim + 1)
        c[-1] = -1.0
        A_ub = None
        b_ub = None
        if m:
            A_ub = np.hstack([self.B, np.ones((m, 1))])
            b_ub = self.b
        A_eq = None
        b_eq = None
        if self.n_equalities:
            A_eq = np.hstack([self.H, np.zeros((self.n_equalities, 1))])
            b_eq = self.h
        bounds = [(None, None)] * self.dim + [(None, 1.0)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if not res.success or res.x is None:
            raise InfeasibleSetError(f"strategy set is empty (LP status: {res.message})")
        t = res.x[-1]
        if t < -1e-9:
            cert = None
            try:
                duals = []
                if m:
                    duals.append(np.asarray(res.ineqlin.marginals))
                if self.n_equalities:
                    duals.append(np.asarray(res.eqlin.marginals))
                cert = np.concatenate(duals) if duals else None
            except AttributeError:
                pass
            raise InfeasibleSetError(
                f"strategy set is empty (max inequality slack {-t:.3e} below zero)",
                certificate=cert,
            )
        x = res.x[: self.dim]
        self._cache.update(feasible=x, strict=bool(t > 1e-9))
        return x

    def has_interior(self) -> bool:
        """True if a strictly feasible point exists (w.r.t. the inequalities)."""
        self.strictly_feasible_point()
        return self._cache["strict"]


# ---------------------------------------------------------------------------
# strategy profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Stacked strategies of all players with block accessors.

    ``x`` is the flat ``(N*n,)`` vector; ``block(i)`` views player ``i``'s
    slice.
    """

    x: np.ndarray
    n: int

    def __post_init__(self):
        x = _as_vector(self.x, "x")
        if self.n < 1 or x.shape[0] % self.n:
            raise DimensionError(
                f"profile length {x.shape[0]} is not a multiple of the strategy dim {self.n}"
            )
        object.__setattr__(self, "x", x)

    @property
    def n_players(self) -> int:
        return self.x.shape[0] // self.n

    def block(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n_players:
            raise DimensionError(f"player index {i} out of range")
        return self.x[i * self.n : (i + 1) * self.n]

    def as_matrix(self) -> np.ndarray:
        """Strategies as an ``(N, n)`` array, one row per player."""
        return self.x.reshape(self.n_players, self.n)


# ---------------------------------------------------------------------------
# cost models
# ---------------------------------------------------------------------------


class ParametricCostModel(ABC):
    """Per-player cost ``J_i(x_i, z_i, y_i)`` and the derivatives of its
    gradient map.

    All derivative methods are taken at a *frozen aggregate*: ``grad`` is the
    gradient of the cost in ``x_i`` with ``z_i`` held fixed as a separate
    argument, ``hess``/``cross``/``param_jac`` are the Jacobians of ``grad``
    with respect to ``x_i``, ``z_i`` and the parameter.  The game assembly in
    :class:`GameSpec` applies the chain rule through the interaction matrix,
    so models never need to know the network.

    ``shared_parameters`` distinguishes a single global parameter vector
    (every player's gradient block responds to the same ``y``) from the
    default per-player stacking ``y = [y_1; ...; y_N]``.
    """

    #: strategy dimension n of each player
    n: int = 1
    #: one global parameter vector instead of per-player blocks
    shared_parameters: bool = False
    #: hess/cross do not depend on (x, z); enables one-shot curvature bounds
    constant_curvature: bool = False

    def param_dim(self, i: int) -> int:
        """Length of player ``i``'s parameter block (of the shared vector)."""
        return self.n

    @abstractmethod
    def cost(self, i: int, x_i, z_i, y_i) -> float:
        """Cost value ``J_i(x_i, z_i, y_i)``."""

    @abstractmethod
    def grad(self, i: int, x_i, z_i, y_i) -> np.ndarray:
        """Gradient of ``J_i`` in ``x_i`` at frozen aggregate, shape (n,)."""

    @abstractmethod
    def hess(self, i: int, x_i, z_i, y_i) -> np.ndarray:
        """Jacobian of :meth:`grad` in ``x_i``, shape (n, n)."""

    @abstractmethod
    def cross(self, i: int, x_i, z_i, y_i) -> np.ndarray:
        """Jacobian of :meth:`grad` in ``z_i``, shape (n, n)."""

    @abstractmethod
    def param_jac(self, i: int, x_i, z_i, y_i) -> np.ndarray:
        """Jacobian of :meth:`grad` in the parameter block, shape (n, d_i)."""

    # optional vectorized fast path used by the solver hot loop; models may
    # override when all players share the same formulas
    def grad_all(self, X, Z, y) -> np.ndarray | None:
        return None


class Interaction:
    """Scalar reaction function ``f`` applied componentwise, with derivative.

    ``value`` and ``deriv`` must accept ndarray input.  ``slope_at_zero``
    (``f'(0)``) is what the linearized network analyses use.
    """

    def __init__(self, value, deriv, linear: bool = False):
        self._value = value
        self._deriv = deriv
        self.linear = bool(linear)
        f0 = float(np.asarray(value(0.0)))
        if abs(f0) > 1e-12:
            raise ModelViolationError(f"interaction must vanish at zero, got f(0) = {f0:.3e}")

    def __call__(self, w):
        return self._value(w)

    def deriv(self, w):
        return self._deriv(w)

    @property
    def slope_at_zero(self) -> float:
        return float(np.asarray(self._deriv(0.0)))


class LinearInteraction(Interaction):
    """``f(w) = slope * w``."""

    def __init__(self, slope: float):
        slope = float(slope)
        super().__init__(lambda w: slope * np.asarray(w, dtype=float),
                         lambda w: np.full_like(np.asarray(w, dtype=float), slope),
                         linear=True)
        self.slope = slope


class QuadraticShockCost(ParametricCostModel):
    """Quadratic self-cost minus an interaction payoff:

        J_i = 0.5 ||x_i||^2  -  f(z_i + y_i) . x_i

    with ``f`` applied componentwise.  The parameter ``y_i`` is an additive
    shock to the aggregate; its block dimension equals the strategy
    dimension.
    """

    def __init__(self, interaction: Interaction, n: int = 1):
        if n < 1:
            raise DimensionError("strategy dimension must be positive")
        self.interaction = interaction
        self.n = int(n)
        self.constant_curvature = interaction.linear

    def cost(self, i, x_i, z_i, y_i):
        x_i = np.asarray(x_i, dtype=float)
        return 0.5 * float(x_i @ x_i) - float(self.interaction(np.asarray(z_i) + y_i) @ x_i)

    def grad(self, i, x_i, z_i, y_i):
        return np.asarray(x_i, dtype=float) - self.interaction(np.asarray(z_i) + y_i)

    def hess(self, i, x_i, z_i, y_i):
        return np.eye(self.n)

    def cross(self, i, x_i, z_i, y_i):
        return -np.diag(np.atleast_1d(self.interaction.deriv(np.asarray(z_i) + y_i)))

    def param_jac(self, i, x_i, z_i, y_i):
        # y enters only through z + y, so the two Jacobians coincide
        return self.cross(i, x_i, z_i, y_i)

    def grad_all(self, X, Z, y):
        Y = np.asarray(y, dtype=float).reshape(X.shape)
        return X - self.interaction(Z + Y)


class FriedkinJohnsenCost(ParametricCostModel):
    """Cost whose Nash equilibrium reproduces the stationary opinions of
    opinion dynamics with stubbornness ``theta``:

        J_i = 0.5 ||x_i||^2  -  (z_i + y_i) . x_i / (1 + theta)

    Note: the parameter expected here is the *pre-scaled* input
    ``theta * (initial opinion)``; the helpers in :mod:`nagsens.quadratic`
    apply that scaling.  With row-stochastic weights the gradient map is
    ``x_i - (z_i + y_i) / (1 + theta)``.
    """

    def __init__(self, theta: float, n: int = 1):
        theta = float(theta)
        if theta <= 0:
            raise ModelViolationError("stubbornness theta must be positive")
        if n < 1:
            raise DimensionError("strategy dimension must be positive")
        self.theta = theta
        self.n = int(n)
        self.constant_curvature = True

    def cost(self, i, x_i, z_i, y_i):
        x_i = np.asarray(x_i, dtype=float)
        pull = (np.asarray(z_i, dtype=float) + y_i) / (1.0 + self.theta)
        return 0.5 * float(x_i @ x_i) - float(pull @ x_i)

    def grad(self, i, x_i, z_i, y_i):
        return np.asarray(x_i, dtype=float) - (np.asarray(z_i, dtype=float) + y_i) / (1.0 + self.theta)

    def hess(self, i, x_i, z_i, y_i):
        return np.eye(self.n)

    def cross(self, i, x_i, z_i, y_i):
        return -np.eye(self.n) / (1.0 + self.theta)

    def param_jac(self, i, x_i, z_i, y_i):
        return -np.eye(self.n) / (1.0 + self.theta)

    def grad_all(self, X, Z, y):
        Y = np.asarray(y, dtype=float).reshape(X.shape)
        return X - (Z + Y) / (1.0 + self.theta)


class AffineRoutingCost(ParametricCostModel):
    """Per-unit-flow cost on a shared road network with affine congestion.

    Edge ``e`` charges ``p_e = slope_e * y_e * load_e + offset_e`` per unit of
    flow; player ``i`` pays ``p(z, y) . x_i`` where the load vector ``z`` is
    the aggregate of *all* flows (own flow included — pair this model with a
    network that allows self loops).  The gradient map then picks up the
    marginal-congestion term:

        grad_i = p(z, y) + diag(slope * y) x_i.

    The parameter ``y`` (one tuning factor per edge) is shared by every
    player.
    """

    shared_parameters = True

    def __init__(self, slopes, offsets):
        slopes = _as_vector(slopes, "slopes")
        offsets = _as_vector(offsets, "offsets")
        if slopes.shape != offsets.shape:
            raise DimensionError("slopes and offsets must have equal length")
        if np.any(slopes <= 0):
            raise ModelViolationError("congestion slopes must be strictly positive")
        if np.any(offsets < 0):
            raise ModelViolationError("free-flow offsets must be nonnegative")
        self.slopes = slopes
        self.offsets = offsets
        self.n = slopes.shape[0]
        self.constant_curvature = True

    def param_dim(self, i: int) -> int:
        return self.n

    def _coeff(self, y):
        c = self.slopes * np.asarray(y, dtype=float)
        if np.any(c <= 0):
            raise ModelViolationError(
                "edge cost coefficients must stay positive (parameter pushed one to zero)"
            )
        return c

    def prices(self, z, y):
        """Per-unit edge costs ``p(z, y)``."""
        return self._coeff(y) * np.asarray(z, dtype=float) + self.offsets

    def cost(self, i, x_i, z_i, y_i):
        return float(self.prices(z_i, y_i) @ np.asarray(x_i, dtype=float))

    def grad(self, i, x_i, z_i, y_i):
        return self.prices(z_i, y_i) + self._coeff(y_i) * np.asarray(x_i, dtype=float)

    def hess(self, i, x_i, z_i, y_i):
        return np.diag(self._coeff(y_i))

    def cross(self, i, x_i, z_i, y_i):
        return np.diag(self._coeff(y_i))

    def param_jac(self, i, x_i, z_i, y_i):
        return np.diag(self.slopes * (np.asarray(z_i, dtype=float) + np.asarray(x_i, dtype=float)))

    def grad_all(self, X, Z, y):
        c = self._coeff(y)
        # all rows of Z coincide (complete interaction): use the first
        return (c * Z[0] + self.offsets)[None, :] + c[None, :] * X


# ---------------------------------------------------------------------------
# game assembly
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GameSpec:
    """A complete constrained network aggregative game.

    Parameters
    ----------
    network : Network
        Interaction weights, one row per player.
    cost : ParametricCostModel
        Shared cost family; per-player data lives inside the model.
    sets : list of PolyhedralSet
        One constraint set per player, each of dimension ``cost.n``.
    """

    network: Network
    cost: ParametricCostModel
    sets: list

    def __post_init__(self):
        N = self.network.size
        if len(self.sets) != N:
            raise DimensionError(f"need one strategy set per player ({N}), got {len(self.sets)}")
        for i, s in enumerate(self.sets):
            if s.dim != self.cost.n:
                raise DimensionError(
                    f"player {i}: set dimension {s.dim} != strategy dimension {self.cost.n}"
                )

    # -- shapes ---------------------------------------------------------------

    @property
    def n_players(self) -> int:
        return self.network.size

    @property
    def n(self) -> int:
        return self.cost.n

    @property
    def dim(self) -> int:
        """Dimension of the stacked strategy vector."""
        return self.n_players * self.n

    @property
    def param_dims(self) -> list:
        return [self.cost.param_dim(i) for i in range(self.n_players)]

    @property
    def total_param_dim(self) -> int:
        if self.cost.shared_parameters:
            return self.cost.param_dim(0)
        return sum(self.param_dims)

    def block(self, x, i: int) -> np.ndarray:
        return np.asarray(x)[i * self.n : (i + 1) * self.n]

    def param_block(self, y, i: int) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.cost.shared_parameters:
            return y
        off = sum(self.param_dims[:i])
        return y[off : off + self.param_dims[i]]

    def profile(self, x) -> StrategyProfile:
        return StrategyProfile(x=np.asarray(x, dtype=float), n=self.n)

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"profile must have shape ({self.dim},), got {x.shape}")
        return x

    def _check_y(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.total_param_dim,):
            raise DimensionError(
                f"parameter must have shape ({self.total_param_dim},), got {y.shape}"
            )
        return y

    # -- evaluations ----------------------------------------------------------

    def aggregates(self, x) -> np.ndarray:
        """All neighbor aggregates as an ``(N, n)`` array."""
        x = self._check_x(x)
        X = x.reshape(self.n_players, self.n)
        return self.network.weights @ X

    def aggregate(self, x, i: int) -> np.ndarray:
        """Player ``i``'s aggregate ``z_i(x)``."""
        x = self._check_x(x)
        X = x.reshape(self.n_players, self.n)
        return self.network.weights[i] @ X

    def cost_of(self, i: int, x, y) -> float:
        x = self._check_x(x)
        y = self._check_y(y)
        z = self.aggregate(x, i)
        return self.cost.cost(i, self.block(x, i), z, self.param_block(y, i))

    def game_operator(self, x, y) -> np.ndarray:
        """Stacked pseudo-gradient ``F(x, y)``, shape ``(N*n,)``."""
        x = self._check_x(x)
        y = self._check_y(y)
        X = x.reshape(self.n_players, self.n)
        Z = self.network.weights @ X
        G = self.cost.grad_all(X, Z, y)
        if G is None:
            G = np.empty_like(X)
            for i in range(self.n_players):
                G[i] = self.cost.grad(i, X[i], Z[i], self.param_block(y, i))
        return np.asarray(G, dtype=float).reshape(-1)

    def operator_jacobian(self, x, y) -> np.ndarray:
        """Dense ``d F / d x`` at ``(x, y)``: blkdiag(hess) + blkdiag(cross) (W kron I)."""
        x = self._check_x(x)
        y = self._check_y(y)
        N, n = self.n_players, self.n
        X = x.reshape(N, n)
        Z = self.network.weights @ X
        W = self.network.weights
        J = np.zeros((N * n, N * n))
        for i in range(N):
            y_i = self.param_block(y, i)
            rows = slice(i * n, (i + 1) * n)
            J[rows, rows] += self.cost.hess(i, X[i], Z[i], y_i)
            Ki = self.cost.cross(i, X[i], Z[i], y_i)
            for j in np.nonzero(W[i])[0]:
                J[rows, j * n : (j + 1) * n] += W[i, j] * Ki
        return J

    def parameter_jacobian(self, x, y) -> np.ndarray:
        """Dense ``d F / d y`` at ``(x, y)``, shape ``(N*n, D)``.

        Per-player parameters give a block-diagonal layout; a shared
        parameter stacks every player's block over the same columns.
        """
        x = self._check_x(x)
        y = self._check_y(y)
        N, n = self.n_players, self.n
        X = x.reshape(N, n)
        Z = self.network.weights @ X
        D = self.total_param_dim
        J = np.zeros((N * n, D))
        col = 0
        for i in range(N):
            y_i = self.param_block(y, i)
            blk = np.asarray(self.cost.param_jac(i, X[i], Z[i], y_i), dtype=float)
            d_i = self.cost.param_dim(i)
            if blk.shape != (n, d_i):
                raise DimensionError(
                    f"player {i}: param_jac must have shape ({n}, {d_i}), got {blk.shape}"
                )
            rows = slice(i * n, (i + 1) * n)
            if self.cost.shared_parameters:
                J[rows, :] = blk
            else:
                J[rows, col : col + d_i] = blk
                col += d_i
        return J

    def check_convexity(self, x, y, tol: float = 1e-10):
        """Spot-check that each player's own-strategy Hessian (chain rule
        through a self loop included) is symmetric positive definite; raise
        :class:`ModelViolationError` naming the first offender."""
        x = self._check_x(x)
        y = self._check_y(y)
        N, n = self.n_players, self.n
        X = x.reshape(N, n)
        Z = self.network.weights @ X
        W = self.network.weights
        for i in range(N):
            y_i = self.param_block(y, i)
            own = np.asarray(self.cost.hess(i, X[i], Z[i], y_i), dtype=float)
            if W[i, i] != 0:
                own = own + W[i, i] * np.asarray(self.cost.cross(i, X[i], Z[i], y_i), dtype=float)
            if np.abs(own - own.T).max() > tol * max(1.0, np.abs(own).max()):
                raise ModelViolationError("own-strategy Hessian is not symmetric", player=i)
            if np.linalg.eigvalsh(0.5 * (own + own.T)).min() <= tol:
                raise ModelViolationError(
                    "own-strategy Hessian is not positive definite", player=i
                )
