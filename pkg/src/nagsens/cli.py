"""Command line interface.

Seven subcommands, one JSON config file each::

    nagsens solve          --config game.json [--out DIR]
    nagsens certify        --config game.json
    nagsens sens           --config game.json
    nagsens centrality     --config quad.json
    nagsens target         --config quad.json
    nagsens fj-sim         --config opinions.json
    nagsens routing-sweep  --config roads.json

Every command writes its table(s) under ``--out`` (default: the working
directory) as ``<command>.csv`` and/or ``<command>.json`` depending on
``--format``, plus a rendered ``<command>.png`` unless ``--no-plots``.
CSV files are deterministic: same config, same seed, same bytes.  Timings
and other non-reproducible diagnostics live only in the JSON report.

Exit codes: 0 success, 2 invalid input, 3 certificate or regularity
refusal, 4 solver non-convergence.  Failures print a one-line JSON error
object to stderr with a machine-readable ``kind``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import plots
from .config import ConfigDocument, parse_config
from .errors import (
    ConfigurationError,
    ConstraintQualificationError,
    DimensionError,
    IllConditionedError,
    InfeasibleSetError,
    ModelViolationError,
    NagsensError,
    NonConvergenceError,
    StepTooLargeError,
    UnsupportedRegimeError,
    ValidationError,
)
from .model import (
    AffineRoutingCost,
    FriedkinJohnsenCost,
    GameSpec,
    LinearInteraction,
    Network,
    PolyhedralSet,
    QuadraticShockCost,
)
from .monotonicity import certify
from .quadratic import (
    QuadraticGameSpec,
    fj_quadratic_spec,
    fj_simulate,
    fj_to_game,
    fj_trajectory,
    select_target,
)
from .reports import run_report, write_csv, write_run_report
from .routing import (
    AffineTravelTime,
    AgentSpec,
    RoadNetwork,
    RoutingScenario,
    flow_and_ttt_sensitivity,
)
from .sensitivity import sensitivity_matrix
from .solver import SolverConfig, solve_nash

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_REFUSED = 3
EXIT_NO_CONVERGENCE = 4

_EXIT_CODES = {
    ValidationError: EXIT_INVALID,
    ConfigurationError: EXIT_INVALID,
    DimensionError: EXIT_INVALID,
    ModelViolationError: EXIT_INVALID,
    InfeasibleSetError: EXIT_INVALID,
    ConstraintQualificationError: EXIT_REFUSED,
    IllConditionedError: EXIT_REFUSED,
    UnsupportedRegimeError: EXIT_REFUSED,
    NonConvergenceError: EXIT_NO_CONVERGENCE,
    StepTooLargeError: EXIT_NO_CONVERGENCE,
}


def _exit_code(exc: NagsensError) -> int:
    for cls, code in _EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return EXIT_INVALID


def _emit_error(exc: NagsensError) -> int:
    body = {"kind": getattr(exc, "kind", "error"), "message": str(exc)}
    if isinstance(exc, ValidationError):
        body["problems"] = list(exc.problems)
    if isinstance(exc, NonConvergenceError):
        if exc.residual is not None:
            body["residual"] = float(exc.residual)
        if exc.iterations is not None:
            body["iterations"] = int(exc.iterations)
    print(json.dumps({"error": body}), file=sys.stderr)
    return _exit_code(exc)


# ---------------------------------------------------------------------------
# builders: config document -> model objects
# ---------------------------------------------------------------------------


def _solver_config(doc: ConfigDocument, args) -> SolverConfig:
    kw = {"seed": args.seed}
    ov = doc.solver_overrides
    if "tol" in ov:
        kw["tol_res"] = float(ov["tol"])
    if "max_iter" in ov:
        kw["max_iter"] = int(ov["max_iter"])
    if "step" in ov:
        kw["step"] = float(ov["step"])
    for k in ("eps_active", "eps_strict"):
        if k in ov:
            kw[k] = float(ov[k])
    if args.tol is not None:
        kw["tol_res"] = args.tol
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    return SolverConfig(**kw)


def _quadratic_spec(doc: ConfigDocument) -> tuple[QuadraticGameSpec, list]:
    blk = doc.payload
    spec = QuadraticGameSpec(
        weights=np.asarray(blk["weights"], dtype=float),
        slope_bound=float(blk["slope"]),
        output_gain=blk.get("output_gain"),
        shock_mean=float(blk.get("shock_mean", 1.0)),
    )
    pinned = [p - 1 for p in blk.get("pinned", [])]
    return spec, pinned


def _fj_inputs(doc: ConfigDocument):
    blk = doc.payload
    P = np.asarray(blk["trust"], dtype=float)
    theta = float(blk["stubbornness"])
    opinions = np.asarray(blk["opinions"], dtype=float)
    steps = int(blk.get("steps", 50))
    return P, theta, opinions, steps


def _routing_scenario(doc: ConfigDocument, q: float | None = None) -> RoutingScenario:
    blk = doc.payload
    net = RoadNetwork(
        n_nodes=int(blk["nodes"]),
        edges=tuple((int(u) - 1, int(v) - 1) for u, v in blk["edges"]),
    )
    divisor = float(blk.get("slope_divisor", 1.0))
    ttm = AffineTravelTime(
        slopes=np.asarray(blk["slopes"], dtype=float) / divisor,
        offsets=np.asarray(blk["offsets"], dtype=float),
    )
    agents_blk = blk["agents"]
    count = int(agents_blk["count"])
    if q is None:
        q = float(blk.get("informed_fraction", 1.0))
    informed = int(round(q * count))
    restricted = frozenset(int(e) - 1 for e in blk.get("restricted_edges", []))
    public = frozenset(range(net.n_edges)) - restricted
    agents = tuple(
        AgentSpec(
            origin=int(agents_blk["origin"]) - 1,
            destination=int(agents_blk["destination"]) - 1,
            demand=float(agents_blk["demand"]),
            known_edges=None if i < informed else public,
        )
        for i in range(count)
    )
    return RoutingScenario(network=net, agents=agents, ttm=ttm)


def _generic_game(doc: ConfigDocument) -> GameSpec:
    blk = doc.payload
    W = np.asarray(blk["weights"], dtype=float)
    net = Network(W, allow_self_loops=bool(blk.get("allow_self_loops", False)))
    cost_blk = blk["cost"]
    kind = cost_blk["kind"]
    n = int(blk.get("n", 1))
    if kind == "quadratic_shock":
        cost = QuadraticShockCost(LinearInteraction(float(cost_blk["slope"])), n=n)
    elif kind == "friedkin_johnsen":
        cost = FriedkinJohnsenCost(float(cost_blk["stubbornness"]), n=n)
    else:
        cost = AffineRoutingCost(cost_blk["slopes"], cost_blk["offsets"])
        n = len(cost_blk["slopes"])
    sets = []
    for entry in blk.get("sets", [{}] * W.shape[0]):
        if "pins" in entry:
            pins = {int(k) - 1: float(v) for k, v in entry["pins"].items()}
            sets.append(PolyhedralSet.with_pins(n, pins))
        elif entry.get("nonnegative"):
            sets.append(PolyhedralSet.nonnegative(n))
        elif any(k in entry for k in ("B", "b", "H", "h")):
            sets.append(PolyhedralSet(
                dim=n,
                B=entry.get("B"), b=entry.get("b"),
                H=entry.get("H"), h=entry.get("h"),
            ))
        else:
            sets.append(PolyhedralSet.unconstrained(n))
    return GameSpec(network=net, cost=cost, sets=sets)


def _game_and_parameters(doc: ConfigDocument) -> tuple[GameSpec, np.ndarray]:
    """Game plus the parameter vector the solver should be handed."""
    if doc.game == "quadratic":
        spec, pinned = _quadratic_spec(doc)
        y = doc.parameters
        if y is None:
            raise ConfigurationError("quadratic games need parameters.y (the shocks)")
        return spec.to_game(pinned or None), y
    if doc.game == "friedkin_johnsen":
        P, theta, opinions, _ = _fj_inputs(doc)
        # the equilibrium map absorbs the prejudice weight into the parameter
        return fj_to_game(P, theta), theta * opinions
    if doc.game == "routing":
        scenario = _routing_scenario(doc)
        y = doc.parameters
        if y is None:
            y = np.ones(scenario.n_edges)
        return scenario.to_game(), y
    game = _generic_game(doc)
    y = doc.parameters
    if y is None:
        raise ConfigurationError("generic games need parameters.y")
    return game, y


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _outputs(args, command: str):
    out_dir = Path(args.out)
    fmt = args.format
    return (
        out_dir / f"{command}.csv" if fmt in ("csv", "both") else None,
        out_dir / f"{command}.json" if fmt in ("json", "both") else None,
        None if args.no_plots else out_dir / f"{command}.png",
    )


def _finish(args, command, doc, header, rows, results, diagnostics, figure=None):
    csv_path, json_path, png_path = _outputs(args, command)
    written = []
    if csv_path is not None:
        written.append(str(write_csv(csv_path, header, rows)))
    if json_path is not None:
        report = run_report(command, doc, args.seed,
                            solver=diagnostics.pop("_solver", {}),
                            results=results, diagnostics=diagnostics)
        written.append(str(write_run_report(json_path, report)))
    if png_path is not None and figure is not None:
        written.append(str(plots.save_figure(figure, png_path)))
    for path in written:
        print(path)
    return EXIT_OK


def _solver_dict(cfg: SolverConfig) -> dict:
    return {
        "step": cfg.step,
        "tol_res": cfg.tol_res,
        "max_iter": cfg.max_iter,
        "eps_active": cfg.eps_active,
        "eps_strict": cfg.eps_strict,
        "seed": cfg.seed,
    }


def _cmd_solve(args, doc: ConfigDocument) -> int:
    cfg = _solver_config(doc, args)
    game, y = _game_and_parameters(doc)
    t0 = time.perf_counter()
    res = solve_nash(game, y, config=cfg)
    wall = time.perf_counter() - t0
    X = res.x_star.as_matrix()
    rows = [(i + 1, k + 1, X[i, k])
            for i in range(X.shape[0]) for k in range(X.shape[1])]
    results = {
        "x_star": X,
        "residual": res.residual,
        "iterations": res.iterations,
        "stationarity_residual": res.stationarity_residual,
        "multipliers_unique": res.multipliers_unique,
    }
    diagnostics = {"wall_seconds": wall, "step": res.step,
                   "active_rows": len(res.active_rows), "_solver": _solver_dict(cfg)}
    fig = None if args.no_plots else plots.equilibrium_figure(X)
    return _finish(args, "solve", doc, ["player", "component", "value"], rows,
                   results, diagnostics, fig)


def _cmd_certify(args, doc: ConfigDocument) -> int:
    cfg = _solver_config(doc, args)
    if doc.game == "routing":
        scenario = _routing_scenario(doc)
        y = doc.parameters
        if y is None:
            y = np.ones(scenario.n_edges)
        margin = scenario.margin(y)
        rows = [("direct", "", "", "", margin, margin > 0)]
        results = {"branch": "direct", "margin": margin, "certified": margin > 0}
        fig = None if args.no_plots else plots.certificate_figure(
            margin, {"smallest edge slope": margin})
        return _finish(args, "certify", doc,
                       ["branch", "min_curvature", "max_coupling", "network_weight",
                        "margin", "certified"],
                       rows, results, {"_solver": _solver_dict(cfg)}, fig)
    game, y = _game_and_parameters(doc)
    cert = certify(game, y)
    rows = [(cert.branch, cert.min_curvature, cert.max_coupling, cert.weight,
             cert.margin, cert.certified)]
    results = {
        "branch": cert.branch,
        "min_curvature": cert.min_curvature,
        "max_coupling": cert.max_coupling,
        "network_weight": cert.weight,
        "margin": cert.margin,
        "certified": cert.certified,
        "mode": cert.mode,
        "jacobian_min_eig": cert.jacobian_min_eig,
    }
    fig = None if args.no_plots else plots.certificate_figure(
        cert.margin, {"min curvature": cert.min_curvature,
                      "coupling x weight": -cert.max_coupling * cert.weight})
    return _finish(args, "certify", doc,
                   ["branch", "min_curvature", "max_coupling", "network_weight",
                    "margin", "certified"],
                   rows, results, {"_solver": _solver_dict(cfg)}, fig)


def _cmd_sens(args, doc: ConfigDocument) -> int:
    cfg = _solver_config(doc, args)
    if doc.game == "routing":
        scenario = _routing_scenario(doc)
        y = doc.parameters
        if y is None:
            y = np.ones(scenario.n_edges)
        t0 = time.perf_counter()
        rep = flow_and_ttt_sensitivity(scenario, y, config=cfg)
        wall = time.perf_counter() - t0
        prices = scenario.ttm.prices(rep.z_star, rep.y)
        rows = [(e + 1, rep.z_star[e], prices[e], rep.ds_dy[e], e in rep.braess_edges)
                for e in range(scenario.n_edges)]
        results = {
            "total_travel_time": rep.s,
            "ds_dy": rep.ds_dy,
            "dz_dy": rep.dz_dy,
            "braess_edges": [e + 1 for e in rep.braess_edges],
            "best_edge": rep.best_edge + 1,
            "perturbed": rep.perturbed,
            "y": rep.y,
        }
        diagnostics = {"wall_seconds": wall,
                       "iterations": rep.equilibrium.iterations,
                       "_solver": _solver_dict(cfg)}
        fig = None if args.no_plots else plots.routing_sensitivity_figure(
            rep.ds_dy, rep.braess_edges, rep.z_star)
        return _finish(args, "sens", doc, ["edge", "load", "price", "ds_dy", "braess"],
                       rows, results, diagnostics, fig)
    game, y = _game_and_parameters(doc)
    t0 = time.perf_counter()
    res = solve_nash(game, y, config=cfg)
    sres = sensitivity_matrix(game, res, y, config=cfg)
    wall = time.perf_counter() - t0
    n = game.cost.n
    D = sres.dx_dy
    rows = [(r // n + 1, r % n + 1, j + 1, D[r, j])
            for r in range(D.shape[0]) for j in range(D.shape[1])]
    sym = 0.5 * (sres.M + sres.M.T)
    results = {
        "dx_dy": D,
        "response_spectrum": np.linalg.eigvalsh(sym),
        "active_rows": sres.report.n_active,
        "independent_rows": len(sres.report.independent_rows),
        "strict_complementarity": sres.report.strict_complementarity,
    }
    diagnostics = {"wall_seconds": wall, "iterations": res.iterations,
                   "_solver": _solver_dict(cfg)}
    fig = None if args.no_plots else plots.sensitivity_figure(D)
    return _finish(args, "sens", doc, ["player", "component", "parameter", "value"],
                   rows, results, diagnostics, fig)


def _centrality_view(doc: ConfigDocument) -> QuadraticGameSpec:
    if doc.game == "quadratic":
        return _quadratic_spec(doc)[0]
    if doc.game == "friedkin_johnsen":
        P, theta, _, _ = _fj_inputs(doc)
        return fj_quadratic_spec(P, theta)
    raise ConfigurationError(
        f"centrality needs a quadratic or friedkin_johnsen config, got {doc.game!r}")


def _cmd_centrality(args, doc: ConfigDocument) -> int:
    spec = _centrality_view(doc)
    report = spec.centrality()
    rows = [(i + 1, report.bonacich[i], report.keyplayer[i])
            for i in range(spec.n_players)]
    results = {
        "bonacich": report.bonacich,
        "keyplayer": report.keyplayer,
        "leontief": report.leontief,
        "blocked": report.blocked,
        "slope": spec.slope_at_zero,
    }
    fig = None if args.no_plots else plots.centrality_figure(
        report.bonacich, report.keyplayer)
    return _finish(args, "centrality", doc, ["player", "bonacich", "keyplayer"],
                   rows, results, {}, fig)


def _cmd_target(args, doc: ConfigDocument) -> int:
    spec = _centrality_view(doc)
    report = spec.centrality()
    gain = spec.chain_gain
    if doc.game == "friedkin_johnsen":
        P, theta, opinions, _ = _fj_inputs(doc)
        shocks = theta * opinions
    else:
        shocks = doc.parameters
    selections = [select_target(report, mode="ex_ante", output_gain=gain)]
    if shocks is not None:
        selections.append(
            select_target(report, mode="ex_post", shocks=shocks, output_gain=gain))
    rows = []
    for sel in selections:
        for i, score in enumerate(sel.scores):
            rows.append((sel.mode, i + 1, score, i == sel.index))
    results = {
        sel.mode: {"player": sel.index + 1, "scores": sel.scores, "tie": sel.tie}
        for sel in selections
    }
    fig = None if args.no_plots else plots.target_figure(
        selections[0].scores, selections[0].index, selections[0].mode)
    return _finish(args, "target", doc, ["mode", "player", "score", "selected"],
                   rows, results, {}, fig)


def _cmd_fj_sim(args, doc: ConfigDocument) -> int:
    if doc.game != "friedkin_johnsen":
        raise ConfigurationError(
            f"fj-sim needs a friedkin_johnsen config, got {doc.game!r}")
    P, theta, opinions, steps = _fj_inputs(doc)
    traj = fj_trajectory(P, theta, opinions, steps)
    fixed = fj_simulate(P, theta, opinions,
                        tol=args.tol if args.tol is not None else 1e-12,
                        max_iter=args.max_iter if args.max_iter is not None else 100_000)
    rows = [(t, i + 1, traj[t, i])
            for t in range(traj.shape[0]) for i in range(traj.shape[1])]
    results = {
        "fixed_point": fixed,
        "final_gap": float(np.max(np.abs(traj[-1] - fixed))),
        "stubbornness": theta,
        "steps": steps,
    }
    fig = None if args.no_plots else plots.opinion_figure(traj)
    return _finish(args, "fj-sim", doc, ["step", "player", "opinion"],
                   rows, results, {}, fig)


def _cmd_routing_sweep(args, doc: ConfigDocument) -> int:
    if doc.game != "routing":
        raise ConfigurationError(
            f"routing-sweep needs a routing config, got {doc.game!r}")
    sweep = doc.data.get("sweep")
    if sweep is None:
        raise ConfigurationError("routing-sweep needs a sweep block "
                                 "(edge, y_grid, q_grid)")
    cfg = _solver_config(doc, args)
    edge = int(sweep["edge"]) - 1
    y_grid = [float(v) for v in sweep["y_grid"]]
    q_grid = [float(v) for v in sweep["q_grid"]]
    base_y = doc.parameters
    if base_y is None:
        base_y = np.ones(_routing_scenario(doc).n_edges)
    rows = []
    table = []
    curves = {}
    t0 = time.perf_counter()
    for q in q_grid:
        scenario = _routing_scenario(doc, q=q)
        informed = sum(1 for a in scenario.agents if a.known_edges is None)
        s_vals, g_vals = [], []
        for y_val in y_grid:
            y = base_y.copy()
            y[edge] = y_val
            rep = flow_and_ttt_sensitivity(scenario, y, config=cfg)
            braess = ";".join(str(e + 1) for e in rep.braess_edges)
            rows.append((q, informed, y_val, rep.s, rep.ds_dy[edge], braess,
                         rep.best_edge + 1, rep.equilibrium.iterations))
            table.append({
                "q": q, "informed": informed, "y": y_val,
                "total_travel_time": rep.s,
                "ds_dy": rep.ds_dy[edge],
                "braess_edges": [e + 1 for e in rep.braess_edges],
                "best_edge": rep.best_edge + 1,
                "perturbed": rep.perturbed,
            })
            s_vals.append(rep.s)
            g_vals.append(rep.ds_dy[edge])
        curves[q] = (s_vals, g_vals)
    wall = time.perf_counter() - t0
    results = {"edge": edge + 1, "runs": table}
    diagnostics = {"wall_seconds": wall, "n_solves": len(rows),
                   "_solver": _solver_dict(cfg)}
    fig = None if args.no_plots else plots.sweep_figure(
        y_grid, curves, f"y[{edge + 1}]")
    header = ["q", "informed", "y", "total_travel_time", "ds_dy",
              "braess_edges", "best_edge", "iterations"]
    return _finish(args, "routing-sweep", doc, header, rows, results,
                   diagnostics, fig)


_COMMANDS = {
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "sens": _cmd_sens,
    "centrality": _cmd_centrality,
    "target": _cmd_target,
    "fj-sim": _cmd_fj_sim,
    "routing-sweep": _cmd_routing_sweep,
}

_HELP = {
    "solve": "compute the equilibrium strategy profile",
    "certify": "check the strong-monotonicity margin",
    "sens": "differentiate the equilibrium in the parameters",
    "centrality": "walk and intervention centralities of a quadratic game",
    "target": "pick the best player to pin",
    "fj-sim": "iterate the opinion dynamics to its rest point",
    "routing-sweep": "trace travel time against one edge parameter",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nagsens",
        description="Equilibria of constrained network games and how they move.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="JSON game description")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=0, help="solver seed (default: 0)")
        p.add_argument("--tol", type=float, default=None,
                       help="override the residual tolerance")
        p.add_argument("--max-iter", type=int, default=None,
                       help="override the iteration budget")
        p.add_argument("--format", choices=("csv", "json", "both"), default="csv",
                       help="table format(s) to write (default: csv)")
        p.add_argument("--no-plots", action="store_true",
                       help="skip the rendered figure")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = parse_config(args.config)
        return args.handler(args, doc)
    except NagsensError as exc:
        return _emit_error(exc)


if __name__ == "__main__":
    sys.exit(main())
