"""Command-line front end.

Subcommands: optimize, evaluate, greedy, coopt, simulate, export-heatmap.
Exit codes: 0 success, 2 invalid spec/arguments/input files, 3 invalid
strategy matrix, 4 output I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import chain
from .defense import co_optimize, greedy_defense
from .graph import (GraphValidationError, PatrolGraph, builtin_sf, induced_subgraph,
                    resolve_graph, validate_distribution)
from .objectives import ObjectiveSpec, evaluate
from .optimizer import RunConfig, multi_start
from .oracle import SimConfig, empirical_capture, simulate_hitting

EXIT_SPEC, EXIT_MATRIX, EXIT_IO = 2, 3, 4
DEFAULT_SMOOTHING = {"sg": 4, "sgm": 1}
METRIC_LABELS = {"mht": "J_MHT", "rte": "J_RTE", "sg": "J_SG", "sgm": "J_SGM"}


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_SPEC):
        super().__init__(message)
        self.code = code


# -- file formats ---------------------------------------------------------------

def format_strategy(P) -> str:
    """CSV text, one row per node, shortest round-tripping decimal per entry."""
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(P))


def write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}", EXIT_IO) from None


def write_strategy(path: Path, P) -> None:
    write_text(path, format_strategy(P))


def read_strategy(path, graph: PatrolGraph | None = None, tol: float = 1e-9) -> np.ndarray:
    """Load a strategy CSV and check it is a transition matrix on ``graph``."""
    try:
        P = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise CLIError(f"cannot read strategy {path}: {exc}") from None
    except ValueError as exc:
        raise CLIError(f"invalid matrix in {path}: {exc}", EXIT_MATRIX) from None
    n = P.shape[0]
    if P.shape != (n, n) or (graph is not None and n != graph.n):
        raise CLIError(f"invalid matrix in {path}: shape {P.shape}", EXIT_MATRIX)
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise CLIError(f"invalid matrix in {path}: negative or non-finite entries", EXIT_MATRIX)
    dev = np.abs(P.sum(axis=1) - 1).max()
    if dev > tol:
        raise CLIError(f"invalid matrix in {path}: row sum off by {dev:.3g}", EXIT_MATRIX)
    if graph is not None and np.any(P[graph.adjacency == 0] != 0):
        raise CLIError(f"invalid matrix in {path}: mass on a missing edge", EXIT_MATRIX)
    return P


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def heatmap_svg(P, labels=None, cell: int = 28) -> str:
    """Standalone SVG: white (0) to dark blue (1), linear in the entry value."""
    P = np.asarray(P)
    n = P.shape[0]
    labels = labels or [str(i) for i in range(n)]
    pad = cell
    size = pad + n * cell + 4
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="{cell // 2}">']
    for i in range(n):
        parts.append(f'<text x="{pad - 4}" y="{pad + i * cell + cell * 0.7:.1f}" text-anchor="end">{labels[i]}</text>')
        parts.append(f'<text x="{pad + i * cell + cell / 2:.1f}" y="{pad - 6}" text-anchor="middle">{labels[i]}</text>')
        for j in range(n):
            v = float(np.clip(P[i, j], 0.0, 1.0))
            r, g, b = (round(255 + (c - 255) * v) for c in (8, 48, 107))
            parts.append(f'<rect x="{pad + j * cell}" y="{pad + i * cell}" width="{cell}" '
                         f'height="{cell}" fill="rgb({r},{g},{b})"><title>P({i},{j})={v:.4g}</title></rect>')
    parts.append("</svg>\n")
    return "\n".join(parts)


# -- run specs ------------------------------------------------------------------

def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CLIError(f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot parse {path}: {exc}") from None


def load_graph_ref(ref: str) -> PatrolGraph:
    if ref != "builtin:sf" and not Path(ref).exists():
        raise CLIError(f"graph file not found: {ref}")
    try:
        return resolve_graph(ref)
    except GraphValidationError as exc:
        raise CLIError(f"invalid graph {ref}: {exc}") from None


def resolve_pi(ref, graph_ref: str, n: int):
    """``"builtin:sf"``, ``"uniform"``, a list, a JSON file path, or ``None``."""
    if ref == "default":
        ref = "builtin:sf" if graph_ref == "builtin:sf" else None
    if ref is None or ref == "none":
        return None
    if ref == "builtin:sf":
        pi = builtin_sf()[1]
    elif ref == "uniform":
        pi = np.full(n, 1.0 / n)
    elif isinstance(ref, list):
        pi = np.asarray(ref, dtype=float)
    else:
        pi = np.asarray(_load_json(ref), dtype=float)
    try:
        return validate_distribution(pi, n)
    except GraphValidationError as exc:
        raise CLIError(f"invalid target distribution: {exc}") from None


def parse_tau(text):
    if text is None or isinstance(text, (int, list)):
        return text
    parts = [p for p in str(text).split(",") if p.strip()]
    return int(parts[0]) if len(parts) == 1 else [int(p) for p in parts]


def parse_partition(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


RUNSPEC_KEYS = {"graph", "metric", "pi", "alpha", "tau", "eta", "smoothing", "robots",
                "pi_mode", "power_iters", "partition", "config", "out", "export"}


def build_runspec(args) -> dict:
    spec = _load_json(args.spec) if getattr(args, "spec", None) else {}
    if not isinstance(spec, dict):
        raise CLIError("run spec must be a JSON object")
    unknown = set(spec) - RUNSPEC_KEYS
    if unknown:
        raise CLIError(f"unknown run spec keys: {sorted(unknown)}")
    spec.setdefault("config", {})
    overrides = {"graph": args.graph, "metric": args.metric, "tau": parse_tau(args.tau),
                 "eta": args.eta, "alpha": args.alpha, "robots": args.robots, "out": args.out,
                 "smoothing": args.smoothing, "pi": args.pi}
    for key, val in overrides.items():
        if val is not None:
            spec[key] = val
    if args.partition:
        spec["partition"] = [parse_partition(p) for p in args.partition]
    for key, val in {"seed": args.seed, "num_inits": args.inits, "max_iters": args.max_iters,
                     "learning_rate": args.learning_rate, "workers": args.workers}.items():
        if val is not None:
            spec["config"][key] = val
    spec.setdefault("graph", "builtin:sf")
    if "metric" not in spec:
        raise CLIError("no metric given (--metric or run spec 'metric')")
    if "out" not in spec:
        raise CLIError("no output directory given (--out or run spec 'out')")
    return spec


def objective_from_runspec(spec: dict, graph: PatrolGraph, pi) -> ObjectiveSpec:
    metric = spec["metric"]
    robots = int(spec.get("robots", 1))
    graphs = (graph,) * robots if metric == "sgm" else graph
    try:
        return ObjectiveSpec(
            metric=metric, graphs=graphs, pi=pi, alpha=float(spec.get("alpha", 1.0)),
            tau=spec.get("tau"), eta=float(spec.get("eta", 0.1)),
            smoothing=int(spec.get("smoothing") or DEFAULT_SMOOTHING.get(metric, 1)),
            pi_mode=spec.get("pi_mode"),
            power_iters=int(spec.get("power_iters", 100)))
    except (ValueError, GraphValidationError) as exc:
        raise CLIError(f"invalid objective: {exc}") from None


def config_from_runspec(spec: dict) -> RunConfig:
    try:
        return RunConfig(**spec.get("config", {}))
    except (TypeError, ValueError) as exc:
        raise CLIError(f"invalid run config: {exc}") from None


def _summary(result, metric: str) -> dict:
    ok = [r for r in result.records if not r.failed]
    best = result.best
    iters = [r.iterations for r in ok]
    walls = [r.wall_time for r in ok]
    return {
        "metric": metric,
        METRIC_LABELS[metric]: best.metric,
        "penalty": best.penalty,
        "best_index": result.best_index,
        "best_seed": best.seed,
        "wall_time": best.wall_time,
        "iterations": best.iterations,
        "avg_wall_time": float(np.mean(walls)) if ok else None,
        "avg_iterations": float(np.mean(iters)) if ok else None,
        "avg_iter_per_sec": float(np.sum(iters) / np.sum(walls)) if ok and np.sum(walls) > 0 else None,
        "avg_metric": float(np.mean([r.metric for r in ok])) if ok else None,
        "num_runs": len(result.records),
        "failed_runs": len(result.records) - len(ok),
    }


# -- subcommands ----------------------------------------------------------------

def cmd_optimize(args) -> int:
    spec = build_runspec(args)
    graph = load_graph_ref(spec["graph"])
    pi = resolve_pi(spec.get("pi", "default"), spec["graph"], graph.n)
    config = config_from_runspec(spec)
    out = Path(spec["out"])
    export = spec.get("export") or {}
    if spec.get("partition"):
        return _optimize_partitions(spec, graph, pi, config, out, export)
    obj = objective_from_runspec(spec, graph, pi)
    result = multi_start(obj, config)
    files = _write_run(out, result, obj, export, graph.labels)
    summary = _summary(result, obj.metric) | {"files": files}
    write_text(out / "summary.json", dump_json(summary))
    print(dump_json(summary), end="")
    return 0


def _write_run(out: Path, result, obj: ObjectiveSpec, export: dict, labels, prefix="strategy") -> list[str]:
    best = result.best
    files = []
    names = [f"{prefix}.csv"] if obj.robots == 1 else [f"{prefix}_r{r}.csv" for r in range(obj.robots)]
    for name, P in zip(names, best.Ps):
        write_strategy(out / name, P)
        files.append(name)
        if export.get("heatmap"):
            svg = name[:-4] + ".svg"
            write_text(out / svg, heatmap_svg(P, list(labels)))
            files.append(svg)
    if obj.robots > 1:
        write_text(out / f"{prefix}_manifest.json", dump_json({"robots": obj.robots, "files": names}))
        files.append(f"{prefix}_manifest.json")
    runs = "".join(json.dumps(r.to_json()) + "\n" for r in result.records)
    write_text(out / f"{prefix.replace('strategy', 'runs')}.jsonl", runs)
    files.append(f"{prefix.replace('strategy', 'runs')}.jsonl")
    return files


def _optimize_partitions(spec, graph, pi, config, out, export) -> int:
    parts = []
    for p, nodes in enumerate(spec["partition"]):
        try:
            sub = induced_subgraph(graph, nodes)
        except (GraphValidationError, KeyError) as exc:
            raise CLIError(f"invalid partition {nodes}: {exc}") from None
        idx = [graph.index(v) for v in nodes]
        sub_pi = None if pi is None else pi[idx] / pi[idx].sum()
        obj = objective_from_runspec(spec | {"robots": 1, "metric": spec["metric"]}, sub, sub_pi)
        result = multi_start(obj, config)
        files = _write_run(out, result, obj, export, sub.labels, prefix=f"strategy_part{p}")
        parts.append(_summary(result, obj.metric) | {"nodes": list(sub.labels), "files": files})
    summary = {"metric": spec["metric"], "partitions": parts}
    write_text(out / "summary.json", dump_json(summary))
    print(dump_json(summary), end="")
    return 0


def cmd_evaluate(args) -> int:
    graph = load_graph_ref(args.graph)
    pi = resolve_pi(args.pi, args.graph, graph.n)
    tau = parse_tau(args.tau)
    rows = []
    for path in args.strategies:
        P = read_strategy(path, graph)
        row = {"strategy": str(path)}
        penalty = float("nan")
        for metric in args.metrics.split(","):
            metric = metric.strip().lower()
            if metric not in ("mht", "rte", "sg"):
                raise CLIError(f"unknown metric {metric!r}")
            try:
                obj = ObjectiveSpec(metric, graph, pi=pi, tau=tau if metric == "sg" else None,
                                    eta=args.eta).resolve_horizon([P])
                value, pen = evaluate(obj, [P])
            except chain.ReducibleChainError:
                value, pen = float("inf"), float("nan")
            except ValueError as exc:
                raise CLIError(f"cannot evaluate {metric}: {exc}") from None
            row[METRIC_LABELS[metric]] = value
            penalty = pen
        row["penalty"] = penalty
        rows.append(row)
    if args.json:
        print(dump_json(rows), end="")
    else:
        cols = [c for c in rows[0] if c != "strategy"]
        print("strategy".ljust(32) + "".join(c.rjust(14) for c in cols))
        for row in rows:
            print(str(row["strategy"])[-32:].ljust(32) + "".join(f"{row[c]:14.6g}" for c in cols))
    return 0


def cmd_greedy(args) -> int:
    graph = load_graph_ref(args.graph)
    P = read_strategy(args.strategy, graph)
    try:
        alloc = greedy_defense(P, graph.weights, args.budget)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    payload = {"tau": alloc.tau.tolist(), "budget": alloc.budget_used,
               "J_SG": alloc.min_capture, "M": alloc.M.tolist()}
    text = dump_json(payload)
    if args.out:
        write_text(Path(args.out), text)
    print(text, end="")
    return 0


def cmd_coopt(args) -> int:
    graph = load_graph_ref(args.graph)
    pi = resolve_pi(args.pi, args.graph, graph.n)
    config = config_from_runspec({"config": {k: v for k, v in {
        "seed": args.seed, "num_inits": args.inits, "max_iters": args.max_iters}.items()
        if v is not None}})
    try:
        obj = ObjectiveSpec("sg", graph, pi=pi, alpha=args.alpha, tau=1,
                            smoothing=args.smoothing or DEFAULT_SMOOTHING["sg"])
        res = co_optimize(obj, args.budget, config, rounds=args.rounds)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    out = Path(args.out)
    write_strategy(out / "strategy.csv", res.P)
    summary = {"J_SG": res.metric, "penalty": res.penalty, "tau": res.tau.tolist(),
               "budget": int(res.tau.sum()), "uniform_tau_J_SG": res.baseline,
               "best_seed": res.record.seed, "traces": res.traces}
    write_text(out / "summary.json", dump_json(summary))
    print(dump_json({k: v for k, v in summary.items() if k != "traces"}), end="")
    return 0


def cmd_simulate(args) -> int:
    graph = load_graph_ref(args.graph)
    Ps = [read_strategy(p, graph) for p in args.strategies]
    cfg = SimConfig(trials=args.trials, horizon=args.horizon, seed=args.seed,
                    weighted=not args.hops)
    if args.hitting:
        i, j = (graph.index(v) for v in args.hitting)
        sample = simulate_hitting(Ps[0], graph.weights, i, j, cfg)
        F = chain.hitting_probs(Ps[0], graph.weights if cfg.weighted else np.ones_like(graph.weights),
                                cfg.horizon).F[:, i, j]
        payload = {"i": i, "j": j, "trials": cfg.trials, "empirical": sample.freq.tolist(),
                   "stderr": sample.stderr.tolist(), "exact": F.tolist(),
                   "censored": sample.censored}
    else:
        tau = parse_tau(args.tau)
        if tau is None:
            raise CLIError("--tau is required for capture simulation")
        from .objectives import as_tau, team_capture_matrix
        tau = as_tau(tau, graph.n)
        emp = empirical_capture(Ps, [graph.weights] * len(Ps), tau, cfg)
        exact = team_capture_matrix(Ps, [graph.weights] * len(Ps), tau)
        sigma = np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / cfg.trials)
        z = np.abs(emp.Lambda - exact) / sigma
        payload = {"trials": cfg.trials, "tau": tau.tolist(), "empirical": emp.Lambda.tolist(),
                   "exact": exact.tolist(), "max_abs_z": float(z.max()),
                   "frac_within_3sigma": float((z <= 3).mean()),
                   "empirical_min": float(emp.Lambda.min()), "exact_min": float(exact.min())}
    text = dump_json(payload)
    if args.out:
        write_text(Path(args.out), text)
    print(text, end="")
    return 0


def cmd_export_heatmap(args) -> int:
    P = read_strategy(args.strategy)
    out = Path(args.out)
    write_strategy(out, P)
    if args.svg:
        write_text(Path(args.svg), heatmap_svg(P))
    return 0


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patrolchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="multi-start strategy optimization")
    p.add_argument("--spec", help="run spec JSON file")
    p.add_argument("--graph", help="graph JSON file or builtin:sf")
    p.add_argument("--metric", choices=["mht", "rte", "sg", "sgm"])
    p.add_argument("--pi", help="target distribution: builtin:sf, uniform, none or JSON file")
    p.add_argument("--tau", help="attack duration, scalar or comma-separated vector")
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--smoothing", type=int)
    p.add_argument("--robots", type=int)
    p.add_argument("--partition", action="append",
                   help="comma-separated node labels; repeat once per robot")
    p.add_argument("--inits", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--workers", type=int, help="parallel processes for the multi-start")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="cross-metric table for strategy CSV files")
    p.add_argument("strategies", nargs="+")
    p.add_argument("--graph", default="builtin:sf")
    p.add_argument("--pi", default="default")
    p.add_argument("--metrics", default="mht,rte,sg")
    p.add_argument("--tau", default="9")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("greedy", help="greedy defense placement for a strategy")
    p.add_argument("strategy")
    p.add_argument("--graph", default="builtin:sf")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("coopt", help="co-optimize strategy and defense placement")
    p.add_argument("--graph", default="builtin:sf")
    p.add_argument("--pi", default="default")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--smoothing", type=int)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--inits", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coopt)

    p = sub.add_parser("simulate", help="Monte Carlo check of capture or hitting probabilities")
    p.add_argument("strategies", nargs="+", help="one CSV per robot")
    p.add_argument("--graph", default="builtin:sf")
    p.add_argument("--tau")
    p.add_argument("--hitting", nargs=2, metavar=("I", "J"), help="simulate T_IJ instead")
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--hops", action="store_true", help="count transitions instead of minutes")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-heatmap", help="write heatmap data (CSV) and optional SVG")
    p.add_argument("strategy")
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_export_heatmap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"patrolchain: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
