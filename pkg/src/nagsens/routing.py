"""Atomic splittable routing games on directed road networks.

Each agent splits a divisible demand over the edges of a shared network,
paying the congestion-dependent travel time of every unit it routes.  Flow
conservation and edge knowledge are polyhedral constraints, so the whole
game drops into the generic machinery: the aggregate is the total edge load
(every player interacts with every player, own flow included), the operator
is ``p(z, y) + diag(dp/dz) x_i``, and the equilibrium derivative of the
total travel time follows from the chain rule through the flow sensitivity.

The bundled four-node fixture (two congestible roads, two constant-offset
roads, one shortcut whose cost scale is the parameter of interest) is the
classic configuration in which *improving* the shortcut can raise the total
travel time, and in which hiding the shortcut from agents lowers it.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    ConfigurationError,
    ConstraintQualificationError,
    DimensionError,
    InfeasibleSetError,
    UnsupportedRegimeError,
)
from .model import AffineRoutingCost, GameSpec, Network, PolyhedralSet
from .sensitivity import sensitivity_matrix
from .solver import SolverConfig, solve_nash

__all__ = [
    "AffineTravelTime",
    "AgentSpec",
    "RoadNetwork",
    "RoutingReport",
    "RoutingScenario",
    "TravelTimeModel",
    "build_feasible_set",
    "flow_and_ttt_sensitivity",
    "routing_operator",
    "total_travel_time",
    "wheatstone_config",
    "wheatstone_parameters",
    "wheatstone_scenario",
]


# ---------------------------------------------------------------------------
# network and agents


@dataclass(frozen=True)
class RoadNetwork:
    """Directed road network with an ordered edge list.

    Parameters
    ----------
    n_nodes : int
    edges : sequence of (u, v)
        Directed edges, 0-based node indices, no self loops.
    """

    n_nodes: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if self.n_nodes < 2:
            raise DimensionError("a road network needs at least two nodes")
        for e, (u, v) in enumerate(self.edges):
            if u == v:
                raise ConfigurationError(f"edge {e} is a self loop ({u} -> {u})")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ConfigurationError(f"edge {e} = ({u}, {v}) leaves the node range")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def incidence(self) -> np.ndarray:
        """Node-edge incidence: -1 at the tail of each edge, +1 at the head."""
        H = np.zeros((self.n_nodes, self.n_edges))
        for e, (u, v) in enumerate(self.edges):
            H[u, e] = -1.0
            H[v, e] = 1.0
        return H

    def reachable(self, origin: int, allowed) -> set:
        """Nodes reachable from ``origin`` using the ``allowed`` edge indices."""
        adj = {}
        for e in allowed:
            u, v = self.edges[e]
            adj.setdefault(u, []).append(v)
        seen = {origin}
        frontier = [origin]
        while frontier:
            u = frontier.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return seen


@dataclass(frozen=True)
class AgentSpec:
    """One agent's routing problem: demand between two nodes, limited map.

    ``known_edges`` is the set of edge indices the agent can use (``None``
    means the full network).  Demand may be zero — the agent then just sits
    still — but negative demand is rejected.
    """

    origin: int
    destination: int
    demand: float
    known_edges: frozenset | None = None

    def __post_init__(self):
        if self.origin == self.destination:
            raise ConfigurationError("origin and destination coincide")
        if self.demand < 0:
            raise ConfigurationError(f"demand must be nonnegative, got {self.demand}")
        if self.known_edges is not None:
            object.__setattr__(self, "known_edges", frozenset(int(e) for e in self.known_edges))

    def knows(self, n_edges: int):
        return range(n_edges) if self.known_edges is None else sorted(self.known_edges)


def build_feasible_set(net: RoadNetwork, agent: AgentSpec, name: str | None = None) -> PolyhedralSet:
    """Polyhedral flow set of one agent.

    Rows: ``x >= 0`` on every edge; node balance ``H x = demand * (e_dest -
    e_orig)``; and an equality ``x_e = 0`` for every edge missing from the
    agent's map.  The node-balance block keeps all ``|V|`` rows (one is
    redundant by conservation) so it matches the incidence convention
    exactly; downstream row-space handling copes with the redundancy.
    """
    E = net.n_edges
    known = set(agent.knows(E))
    if agent.demand > 0:
        reach = net.reachable(agent.origin, known)
        if agent.destination not in reach:
            raise InfeasibleSetError(
                f"{name or 'agent'}: no route from node {agent.origin + 1} to "
                f"node {agent.destination + 1} within its known edges"
            )
    h_bal = np.zeros(net.n_nodes)
    h_bal[agent.origin] = -agent.demand
    h_bal[agent.destination] = agent.demand
    unknown = [e for e in range(E) if e not in known]
    H = np.vstack([net.incidence] + ([np.eye(E)[unknown]] if unknown else []))
    h = np.concatenate([h_bal, np.zeros(len(unknown))])
    return PolyhedralSet(dim=E, B=-np.eye(E), b=np.zeros(E), H=H, h=h)


# ---------------------------------------------------------------------------
# travel-time models


class TravelTimeModel(ABC):
    """Per-edge travel times ``p_e(z_e, y_e)`` with the two partials."""

    @abstractmethod
    def prices(self, z, y) -> np.ndarray:
        """Travel time per unit of flow on each edge."""

    @abstractmethod
    def congestion_slope(self, z, y) -> np.ndarray:
        """Diagonal of ``dp/dz`` (each edge's time depends on its own load)."""

    @abstractmethod
    def parameter_slope(self, z, y) -> np.ndarray:
        """Diagonal of ``dp/dy``."""


class AffineTravelTime(TravelTimeModel):
    """Affine congestion ``p = diag(slope * y) z + offset``.

    ``y`` scales each edge's congestion coefficient, so the coefficient
    matrix stays positive definite for positive parameters — the regime in
    which the routing game operator is provably strongly monotone.
    """

    def __init__(self, slopes, offsets):
        self.slopes = np.asarray(slopes, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        if self.slopes.shape != self.offsets.shape or self.slopes.ndim != 1:
            raise DimensionError("slopes and offsets must be equal-length vectors")
        if np.any(self.slopes <= 0):
            raise ConfigurationError("congestion slopes must be positive")
        if np.any(self.offsets < 0):
            raise ConfigurationError("free-flow offsets must be nonnegative")

    @property
    def n_edges(self) -> int:
        return self.slopes.shape[0]

    def coefficients(self, y) -> np.ndarray:
        c = self.slopes * np.asarray(y, dtype=float)
        if np.any(c <= 0):
            raise ConfigurationError("edge parameters must keep every coefficient positive")
        return c

    def prices(self, z, y):
        return self.coefficients(y) * np.asarray(z, dtype=float) + self.offsets

    def congestion_slope(self, z, y):
        return np.broadcast_to(self.coefficients(y), np.shape(z)).copy()

    def parameter_slope(self, z, y):
        return self.slopes * np.asarray(z, dtype=float)

    def to_cost(self) -> AffineRoutingCost:
        return AffineRoutingCost(self.slopes, self.offsets)


def routing_operator(net: RoadNetwork, agents, ttm: TravelTimeModel, x, y) -> np.ndarray:
    """Stacked game operator: block ``i`` is ``p(z, y) + dp/dz . x_i``.

    Accepts the stacked flow vector (agents-major) and returns the same
    layout.  This is the marginal cost each agent faces: the travel time
    itself plus the congestion its own flow inflicts on itself.
    """
    E = net.n_edges
    X = np.asarray(x, dtype=float).reshape(len(agents), E)
    z = X.sum(axis=0)
    p = ttm.prices(z, y)
    c = ttm.congestion_slope(z, y)
    return (p[None, :] + c[None, :] * X).ravel()


def total_travel_time(ttm: TravelTimeModel, z, y) -> float:
    """Aggregate travel time ``p(z, y) . z`` over all edges."""
    z = np.asarray(z, dtype=float)
    return float(ttm.prices(z, y) @ z)


# ---------------------------------------------------------------------------
# scenario assembly


@dataclass(eq=False)
class RoutingScenario:
    """A road network, its agents, and the travel-time model, ready to solve."""

    network: RoadNetwork
    agents: list
    ttm: TravelTimeModel

    def __post_init__(self):
        if not self.agents:
            raise ConfigurationError("a routing scenario needs at least one agent")
        if isinstance(self.ttm, AffineTravelTime) and self.ttm.n_edges != self.network.n_edges:
            raise DimensionError(
                f"travel-time model covers {self.ttm.n_edges} edges, network has {self.network.n_edges}"
            )
        for i, a in enumerate(self.agents):
            for e in a.knows(self.network.n_edges):
                if not 0 <= e < self.network.n_edges:
                    raise ConfigurationError(f"agent {i} knows nonexistent edge {e}")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_edges(self) -> int:
        return self.network.n_edges

    def to_game(self) -> GameSpec:
        """Generic game view: complete interaction with self loops.

        The aggregate each agent reacts to is the *total* load including its
        own flow, so the interaction matrix is all ones — diagonal included.
        """
        if not isinstance(self.ttm, AffineTravelTime):
            raise UnsupportedRegimeError(
                "only affine travel times bridge to the generic game; "
                "the monotonicity analysis does not cover this model"
            )
        N = self.n_agents
        sets = [
            build_feasible_set(self.network, a, name=f"agent {i + 1}")
            for i, a in enumerate(self.agents)
        ]
        return GameSpec(
            network=Network(np.ones((N, N)), allow_self_loops=True),
            cost=self.ttm.to_cost(),
            sets=sets,
        )

    def solve(self, y, config: SolverConfig | None = None, x0=None):
        return solve_nash(self.to_game(), y, config=config, x0=x0)

    def margin(self, y) -> float:
        """Exact monotonicity margin of the affine routing operator.

        The operator Jacobian is ``[I_N + 1 1^T] (x) C(y)`` (Kronecker), so
        the margin is the smallest eigenvalue of its symmetric part — for the
        affine model simply ``min_e C_ee(y)`` times the smallest eigenvalue
        of ``I_N + 1 1^T``, which is 1.  Positive for every positive ``y``.
        """
        from .monotonicity import direct_margin

        return direct_margin(self.to_game(), y)


# ---------------------------------------------------------------------------
# sensitivity of the total travel time


@dataclass(frozen=True)
class RoutingReport:
    """Equilibrium flows and the travel-time response to edge parameters.

    Attributes
    ----------
    x_star : (N, E) ndarray
        Per-agent equilibrium edge flows.
    z_star : (E,) ndarray
        Total edge loads.
    s : float
        Total travel time at equilibrium.
    ds_dy : (E,) ndarray
        Gradient of ``s`` with respect to each edge's parameter.
    dz_dy : (E, E) ndarray
        Flow response; column ``e`` is the load shift from bumping ``y_e``.
    braess_edges : tuple
        Edges whose *improvement* would raise total travel time
        (``ds/dy_e < 0``), 0-based.
    best_edge : int
        Edge whose parameter increase raises ``s`` fastest (0-based).
    y : (E,) ndarray
        Parameters the report was evaluated at (after any retry shift).
    perturbed : bool
        True when the constraint-qualification retry nudged ``y``.
    """

    x_star: np.ndarray
    z_star: np.ndarray
    s: float
    ds_dy: np.ndarray
    dz_dy: np.ndarray
    braess_edges: tuple
    best_edge: int
    y: np.ndarray
    perturbed: bool = False
    equilibrium: object = None
    active_report: object = field(default=None, repr=False)


def _evaluate_report(scenario, game, result, y, sens, perturbed) -> RoutingReport:
    N, E = scenario.n_agents, scenario.n_edges
    X = result.x_star.x.reshape(N, E)
    z = X.sum(axis=0)
    dz_dy = sens.dx_dy.reshape(N, E, E).sum(axis=0)
    p = scenario.ttm.prices(z, y)
    c = scenario.ttm.congestion_slope(z, y)
    # chain rule: s = p(z, y) . z, with z itself moving with y
    ds_dy = z * scenario.ttm.parameter_slope(z, y) + (p + c * z) @ dz_dy
    braess = tuple(int(e) for e in np.nonzero(ds_dy < -1e-9)[0])
    return RoutingReport(
        x_star=X,
        z_star=z,
        s=total_travel_time(scenario.ttm, z, y),
        ds_dy=ds_dy,
        dz_dy=dz_dy,
        braess_edges=braess,
        best_edge=int(np.argmax(ds_dy)),
        y=np.asarray(y, dtype=float).copy(),
        perturbed=perturbed,
        equilibrium=result,
        active_report=sens.report,
    )


def flow_and_ttt_sensitivity(
    scenario: RoutingScenario,
    y,
    result=None,
    config: SolverConfig | None = None,
    retry_shift: float = 1e-7,
) -> RoutingReport:
    """Travel-time gradient and flow response at the equilibrium.

    Solves the routing game (unless ``result`` is supplied), differentiates
    the equilibrium flows with respect to every edge parameter, and chains
    through the total travel time.  When strict complementarity genuinely
    fails at ``y`` — an agent exactly indifferent about an unused edge — the
    evaluation point is shifted by ``retry_shift`` on every edge parameter
    and retried once; the report says so.

    Raises
    ------
    ConstraintQualificationError
        If the retry also lands on a degenerate point.
    """
    game = scenario.to_game()
    y = np.asarray(y, dtype=float)
    if result is None:
        result = solve_nash(game, y, config=config)
    try:
        sens = sensitivity_matrix(game, result, y, config=config)
        return _evaluate_report(scenario, game, result, y, sens, perturbed=False)
    except ConstraintQualificationError:
        if retry_shift <= 0:
            raise
    y2 = y + retry_shift
    result2 = solve_nash(game, y2, config=config, x0=result.x_star.x)
    sens2 = sensitivity_matrix(game, result2, y2, config=config)
    return _evaluate_report(scenario, game, result2, y2, sens2, perturbed=True)


# ---------------------------------------------------------------------------
# bundled fixture


def wheatstone_config() -> dict:
    """Parsed copy of the bundled four-node fixture configuration."""
    with resources.files("nagsens").joinpath("data/wheatstone.json").open("r") as fh:
        return json.load(fh)


def wheatstone_parameters(shortcut_scale: float = 1.0) -> np.ndarray:
    """Edge parameter vector with only the shortcut's coefficient scaled."""
    cfg = wheatstone_config()["routing"]
    y = np.ones(len(cfg["edges"]))
    for e in cfg["restricted_edges"]:
        y[e - 1] = shortcut_scale
    return y


def wheatstone_scenario(informed: int | None = None, q: float | None = None) -> RoutingScenario:
    """The bundled fixture with a chosen number of fully informed agents.

    Parameters
    ----------
    informed : int, optional
        How many agents know the whole network (the rest do not know the
        restricted edge).  Mutually exclusive with ``q``.
    q : float, optional
        Informed fraction; ``q * n_agents`` must be an integer.
    """
    cfg = wheatstone_config()["routing"]
    N = int(cfg["agents"]["count"])
    if informed is not None and q is not None:
        raise ConfigurationError("pass informed or q, not both")
    if informed is None:
        q = float(cfg.get("informed_fraction", 1.0)) if q is None else float(q)
        k_real = q * N
        informed = int(round(k_real))
        if abs(k_real - informed) > 1e-9:
            raise ConfigurationError(
                f"informed fraction {q} of {N} agents is not a whole number of agents"
            )
    if not 0 <= informed <= N:
        raise ConfigurationError(f"informed count {informed} outside [0, {N}]")
    edges = [(u - 1, v - 1) for u, v in cfg["edges"]]
    net = RoadNetwork(n_nodes=int(cfg["nodes"]), edges=tuple(edges))
    slopes = np.asarray(cfg["slopes"], dtype=float) / float(cfg.get("slope_divisor", 1.0))
    ttm = AffineTravelTime(slopes, np.asarray(cfg["offsets"], dtype=float))
    restricted = {e - 1 for e in cfg["restricted_edges"]}
    full = frozenset(range(net.n_edges))
    limited = frozenset(full - restricted)
    a = cfg["agents"]
    agents = [
        AgentSpec(
            origin=int(a["origin"]) - 1,
            destination=int(a["destination"]) - 1,
            demand=float(a["demand"]),
            known_edges=full if i < informed else limited,
        )
        for i in range(N)
    ]
    return RoutingScenario(network=net, agents=agents, ttm=ttm)
