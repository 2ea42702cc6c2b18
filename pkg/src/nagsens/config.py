"""Configuration documents for the command line.

A configuration is a single UTF-8 JSON file naming one game (``quadratic``,
``friedkin_johnsen``, ``routing``, or ``generic``) plus its payload block,
optional shared parameters, and solver overrides.  Validation is collected,
not short-circuited: the caller gets every problem in one pass, each tagged
with the JSON path that caused it.  Matrices are dense row-major arrays.

Player, node, and edge identifiers are 1-based in configuration files (and
in all emitted reports); the Python API is 0-based throughout.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ValidationError

__all__ = ["ConfigDocument", "parse_config"]

_GAMES = ("quadratic", "friedkin_johnsen", "routing", "generic")

_TOP_KEYS = {"schema_version", "game", "parameters", "solver"}
_SOLVER_KEYS = {"tol", "max_iter", "step", "eps_active", "eps_strict"}


@dataclass(frozen=True)
class ConfigDocument:
    """A validated configuration: the raw payload plus its provenance."""

    game: str
    data: dict
    source: str
    digest: str
    problems: list = field(default_factory=list, repr=False)

    @property
    def payload(self) -> dict:
        return self.data[self.game]

    @property
    def parameters(self) -> np.ndarray | None:
        y = self.data.get("parameters", {}).get("y")
        return None if y is None else np.asarray(y, dtype=float)

    @property
    def solver_overrides(self) -> dict:
        return dict(self.data.get("solver", {}))


class _Checker:
    """Accumulates `path: message` problems instead of raising one by one."""

    def __init__(self):
        self.problems = []

    def fail(self, path: str, message: str):
        self.problems.append(f"{path}: {message}")

    def number(self, obj, path, *, minimum=None, exclusive_minimum=None, maximum=None):
        if not isinstance(obj, (int, float)) or isinstance(obj, bool):
            self.fail(path, f"expected a number, got {type(obj).__name__}")
            return None
        v = float(obj)
        if minimum is not None and v < minimum:
            self.fail(path, f"must be >= {minimum}, got {v:g}")
            return None
        if exclusive_minimum is not None and v <= exclusive_minimum:
            self.fail(path, f"must be > {exclusive_minimum}, got {v:g}")
            return None
        if maximum is not None and v > maximum:
            self.fail(path, f"must be <= {maximum}, got {v:g}")
            return None
        return v

    def integer(self, obj, path, *, minimum=None, maximum=None):
        if not isinstance(obj, int) or isinstance(obj, bool):
            self.fail(path, f"expected an integer, got {type(obj).__name__}")
            return None
        if minimum is not None and obj < minimum:
            self.fail(path, f"must be >= {minimum}, got {obj}")
            return None
        if maximum is not None and obj > maximum:
            self.fail(path, f"must be <= {maximum}, got {obj}")
            return None
        return obj

    def vector(self, obj, path, *, length=None, minimum=None, exclusive_minimum=None):
        if not isinstance(obj, list):
            self.fail(path, f"expected an array, got {type(obj).__name__}")
            return None
        out = []
        ok = True
        for i, v in enumerate(obj):
            x = self.number(v, f"{path}[{i}]", minimum=minimum, exclusive_minimum=exclusive_minimum)
            ok = ok and x is not None
            out.append(x if x is not None else np.nan)
        if length is not None and len(out) != length:
            self.fail(path, f"expected {length} entries, got {len(out)}")
            return None
        return np.asarray(out) if ok else None

    def matrix(self, obj, path, *, square=True, nonnegative=False, zero_diagonal=False):
        if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
            self.fail(path, "expected a dense row-major matrix (array of arrays)")
            return None
        width = len(obj[0])
        rows = []
        for i, r in enumerate(obj):
            if len(r) != width:
                self.fail(path, f"row {i + 1} has {len(r)} entries, expected {width}")
                return None
            row = self.vector(r, f"{path}[{i}]", length=width)
            if row is None:
                return None
            rows.append(row)
        M = np.asarray(rows)
        if square and M.shape[0] != M.shape[1]:
            self.fail(path, f"must be square, got {M.shape[0]}x{M.shape[1]}")
            return None
        if nonnegative and np.any(M < 0):
            i, j = np.argwhere(M < 0)[0]
            self.fail(path, f"entry ({i + 1},{j + 1}) is negative; weights must be nonnegative")
        if zero_diagonal and np.any(np.abs(np.diag(M)) > 0):
            k = int(np.nonzero(np.abs(np.diag(M)) > 0)[0][0]) + 1
            self.fail(
                path,
                f"diagonal entry ({k},{k}) must be zero — players do not aggregate "
                "their own strategy",
            )
        return M

    def unknown_keys(self, obj: dict, allowed: set, path: str):
        for k in sorted(set(obj) - allowed):
            self.fail(f"{path}.{k}" if path else k, "unknown key")


def _check_quadratic(block: dict, ck: _Checker):
    ck.unknown_keys(block, {"players", "weights", "slope", "output_gain", "shock_mean", "pinned"},
                    "quadratic")
    W = ck.matrix(block.get("weights"), "quadratic.weights", nonnegative=True, zero_diagonal=True)
    N = W.shape[0] if W is not None else None
    if "players" in block:
        n = ck.integer(block["players"], "quadratic.players", minimum=1)
        if n is not None and N is not None and n != N:
            ck.fail("quadratic.players", f"says {n} players but weights are {N}x{N}")
    slope = ck.number(block.get("slope"), "quadratic.slope", exclusive_minimum=0.0)
    if slope is not None and W is not None and slope * np.linalg.norm(W, 2) >= 1.0:
        ck.fail("quadratic.slope", "slope * ||weights||_2 must be < 1 for walk sums to converge")
    if "output_gain" in block:
        ck.number(block["output_gain"], "quadratic.output_gain")
    if "shock_mean" in block:
        ck.number(block["shock_mean"], "quadratic.shock_mean", minimum=0.0)
    if "pinned" in block:
        pins = block["pinned"]
        if not isinstance(pins, list):
            ck.fail("quadratic.pinned", "expected an array of 1-based player ids")
        else:
            for i, p in enumerate(pins):
                k = ck.integer(p, f"quadratic.pinned[{i}]", minimum=1)
                if k is not None and N is not None and k > N:
                    ck.fail(f"quadratic.pinned[{i}]", f"player {k} does not exist (N = {N})")
    return N


def _check_fj(block: dict, ck: _Checker):
    ck.unknown_keys(block, {"trust", "stubbornness", "opinions", "steps"}, "friedkin_johnsen")
    P = ck.matrix(block.get("trust"), "friedkin_johnsen.trust",
                  nonnegative=True, zero_diagonal=True)
    N = P.shape[0] if P is not None else None
    if P is not None:
        bad = np.nonzero(np.abs(P.sum(axis=1) - 1.0) > 1e-9)[0]
        for i in bad:
            ck.fail(f"friedkin_johnsen.trust[{i}]",
                    f"row must sum to 1 (row stochastic), sums to {P[i].sum():.12g}")
    ck.number(block.get("stubbornness"), "friedkin_johnsen.stubbornness", exclusive_minimum=0.0)
    if "opinions" not in block:
        ck.fail("friedkin_johnsen.opinions", "required")
    else:
        y = ck.vector(block["opinions"], "friedkin_johnsen.opinions",
                      length=N, minimum=0.0)
        if y is not None and np.any(y > 1.0):
            ck.fail("friedkin_johnsen.opinions", "entries must lie in [0, 1]")
    if "steps" in block:
        ck.integer(block["steps"], "friedkin_johnsen.steps", minimum=1)
    return N


def _check_routing(block: dict, ck: _Checker):
    ck.unknown_keys(block, {"nodes", "edges", "slopes", "slope_divisor", "offsets",
                            "restricted_edges", "agents", "informed_fraction"}, "routing")
    nodes = ck.integer(block.get("nodes"), "routing.nodes", minimum=2)
    edges = block.get("edges")
    E = None
    if not isinstance(edges, list) or not edges:
        ck.fail("routing.edges", "expected a nonempty array of [u, v] pairs (1-based)")
    else:
        E = len(edges)
        for i, pair in enumerate(edges):
            if not (isinstance(pair, list) and len(pair) == 2):
                ck.fail(f"routing.edges[{i}]", "expected a [u, v] pair")
                continue
            u = ck.integer(pair[0], f"routing.edges[{i}][0]", minimum=1)
            v = ck.integer(pair[1], f"routing.edges[{i}][1]", minimum=1)
            if u is not None and v is not None:
                if u == v:
                    ck.fail(f"routing.edges[{i}]", "self loops are not allowed")
                if nodes is not None and (u > nodes or v > nodes):
                    ck.fail(f"routing.edges[{i}]", f"node id beyond {nodes}")
    ck.vector(block.get("slopes"), "routing.slopes", length=E, exclusive_minimum=0.0)
    if "slope_divisor" in block:
        ck.number(block["slope_divisor"], "routing.slope_divisor", exclusive_minimum=0.0)
    ck.vector(block.get("offsets"), "routing.offsets", length=E, minimum=0.0)
    for i, e in enumerate(block.get("restricted_edges", [])):
        k = ck.integer(e, f"routing.restricted_edges[{i}]", minimum=1)
        if k is not None and E is not None and k > E:
            ck.fail(f"routing.restricted_edges[{i}]", f"edge {k} does not exist (|E| = {E})")
    agents = block.get("agents")
    count = None
    if not isinstance(agents, dict):
        ck.fail("routing.agents", "expected an object with count/demand/origin/destination")
    else:
        ck.unknown_keys(agents, {"count", "demand", "origin", "destination"}, "routing.agents")
        count = ck.integer(agents.get("count"), "routing.agents.count", minimum=1)
        ck.number(agents.get("demand"), "routing.agents.demand", exclusive_minimum=0.0)
        o = ck.integer(agents.get("origin"), "routing.agents.origin", minimum=1)
        d = ck.integer(agents.get("destination"), "routing.agents.destination", minimum=1)
        if o is not None and d is not None and o == d:
            ck.fail("routing.agents", "origin and destination coincide")
        for label, v in (("origin", o), ("destination", d)):
            if v is not None and nodes is not None and v > nodes:
                ck.fail(f"routing.agents.{label}", f"node id beyond {nodes}")
    if "informed_fraction" in block:
        q = ck.number(block["informed_fraction"], "routing.informed_fraction",
                      minimum=0.0, maximum=1.0)
        if q is not None and count is not None and abs(q * count - round(q * count)) > 1e-9:
            ck.fail("routing.informed_fraction",
                    f"{q:g} of {count} agents is not a whole number of agents")
    return E, count


def _check_generic(block: dict, ck: _Checker):
    ck.unknown_keys(block, {"n", "weights", "allow_self_loops", "cost", "sets"}, "generic")
    n = ck.integer(block.get("n", 1), "generic.n", minimum=1)
    loops = bool(block.get("allow_self_loops", False))
    W = ck.matrix(block.get("weights"), "generic.weights",
                  nonnegative=True, zero_diagonal=not loops)
    N = W.shape[0] if W is not None else None
    param_len = N if (n is None or n == 1) else None
    cost = block.get("cost")
    if not isinstance(cost, dict) or "kind" not in cost:
        ck.fail("generic.cost", "expected an object with a 'kind'")
    else:
        kind = cost.get("kind")
        if kind == "quadratic_shock":
            ck.unknown_keys(cost, {"kind", "slope"}, "generic.cost")
            ck.number(cost.get("slope"), "generic.cost.slope", exclusive_minimum=0.0)
        elif kind == "friedkin_johnsen":
            ck.unknown_keys(cost, {"kind", "stubbornness"}, "generic.cost")
            ck.number(cost.get("stubbornness"), "generic.cost.stubbornness",
                      exclusive_minimum=0.0)
        elif kind == "affine_routing":
            ck.unknown_keys(cost, {"kind", "slopes", "offsets"}, "generic.cost")
            s = ck.vector(cost.get("slopes"), "generic.cost.slopes", exclusive_minimum=0.0)
            ck.vector(cost.get("offsets"), "generic.cost.offsets",
                      length=None if s is None else s.shape[0], minimum=0.0)
            param_len = None if s is None else s.shape[0]
        else:
            ck.fail("generic.cost.kind", f"unknown cost kind {kind!r}")
    sets = block.get("sets")
    if sets is not None:
        if not isinstance(sets, list) or (N is not None and len(sets) != N):
            ck.fail("generic.sets", f"expected one entry per player ({N})")
        else:
            for i, s in enumerate(sets):
                if not isinstance(s, dict):
                    ck.fail(f"generic.sets[{i}]", "expected an object")
                    continue
                ck.unknown_keys(s, {"pins", "nonnegative", "B", "b", "H", "h"},
                                f"generic.sets[{i}]")
                if "pins" in s and not isinstance(s["pins"], dict):
                    ck.fail(f"generic.sets[{i}].pins",
                            "expected an object of 1-based coordinate -> value")
    return param_len


def parse_config(path: str) -> ConfigDocument:
    """Load and validate a configuration file.

    Raises
    ------
    ConfigurationError
        Missing file or malformed JSON (with line/column).
    ValidationError
        Any schema problem; ``problems`` lists all of them.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid UTF-8 ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ValidationError(["top level must be an object"])

    ck = _Checker()
    version = data.get("schema_version")
    if version != "1":
        ck.fail("schema_version", f"expected \"1\", got {version!r}")
    game = data.get("game")
    if game not in _GAMES:
        ck.fail("game", f"must be one of {', '.join(_GAMES)}; got {game!r}")
        raise ValidationError(ck.problems)

    allowed = _TOP_KEYS | {game} | ({"sweep"} if game == "routing" else set())
    ck.unknown_keys(data, allowed, "")
    block = data.get(game)
    if not isinstance(block, dict):
        ck.fail(game, "missing payload block")
        raise ValidationError(ck.problems)

    param_len = None
    if game == "quadratic":
        param_len = _check_quadratic(block, ck)
    elif game == "friedkin_johnsen":
        _check_fj(block, ck)
    elif game == "routing":
        E, count = _check_routing(block, ck)
        param_len = E
        sweep = data.get("sweep")
        if sweep is not None:
            ck.unknown_keys(sweep, {"edge", "y_grid", "q_grid"}, "sweep")
            e = ck.integer(sweep.get("edge"), "sweep.edge", minimum=1)
            if e is not None and E is not None and e > E:
                ck.fail("sweep.edge", f"edge {e} does not exist (|E| = {E})")
            ck.vector(sweep.get("y_grid"), "sweep.y_grid", exclusive_minimum=0.0)
            qs = ck.vector(sweep.get("q_grid"), "sweep.q_grid", minimum=0.0)
            if qs is not None:
                for i, q in enumerate(qs):
                    if q > 1.0:
                        ck.fail(f"sweep.q_grid[{i}]", "informed fraction above 1")
                    elif count is not None and abs(q * count - round(q * count)) > 1e-9:
                        ck.fail(f"sweep.q_grid[{i}]",
                                f"{q:g} of {count} agents is not a whole number")
    else:
        param_len = _check_generic(block, ck)

    if "parameters" in data:
        params = data["parameters"]
        if not isinstance(params, dict):
            ck.fail("parameters", "expected an object with key 'y'")
        else:
            ck.unknown_keys(params, {"y"}, "parameters")
            y = ck.vector(params.get("y"), "parameters.y")
            if y is not None and param_len is not None and y.shape[0] != param_len:
                ck.fail("parameters.y", f"expected {param_len} entries, got {y.shape[0]}")
            if y is not None and game == "routing" and np.any(y <= 0):
                ck.fail("parameters.y", "routing parameters must be positive")

    solver = data.get("solver")
    if solver is not None:
        if not isinstance(solver, dict):
            ck.fail("solver", "expected an object")
        else:
            ck.unknown_keys(solver, _SOLVER_KEYS, "solver")
            if "tol" in solver:
                ck.number(solver["tol"], "solver.tol", exclusive_minimum=0.0)
            if "step" in solver:
                ck.number(solver["step"], "solver.step", exclusive_minimum=0.0)
            if "max_iter" in solver:
                ck.integer(solver["max_iter"], "solver.max_iter", minimum=1)
            for k in ("eps_active", "eps_strict"):
                if k in solver:
                    ck.number(solver[k], f"solver.{k}", exclusive_minimum=0.0)

    if ck.problems:
        raise ValidationError(ck.problems)
    return ConfigDocument(game=game, data=data, source=str(path), digest=digest)
