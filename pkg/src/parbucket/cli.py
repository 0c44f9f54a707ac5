"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import graphs, sssp
from .engine import EngineConfig, Engine
from .errors import DataError, EmptyHeapError, InvariantError, ParBucketError, PreconditionError
from .oracle import ReferenceQueue
from .scheduler import closed_form_start, lockstep_simulate, verify_schedule
from .traces import load_trace

REPORT_SCHEMA = "parbucket.bench/1"
FAMILIES = ("random", "dag", "complete", "highdiam")
ALGOS = ("pardijkstra", "dijkstra", "bellmanford", "floydwarshall")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(obj, out=None) -> None:
    print(json.dumps(obj), file=out or sys.stdout)


# ---------------------------------------------------------------- gen


def make_graph(family: str, v: int, e: int | None, outdeg: int | None, max_weight: int, seed: int):
    try:
        if family == "random":
            if e is None:
                raise UsageError("--e is required for the random family")
            return graphs.gen_random(v, e, max_weight, seed)
        if family == "highdiam":
            if e is None:
                raise UsageError("--e is required for the highdiam family")
            return graphs.gen_high_diameter(v, e, max_weight, seed)
        if family == "dag":
            if outdeg is None:
                raise UsageError("--outdeg is required for the dag family")
            return graphs.gen_dag(v, outdeg, max_weight, seed)
        return graphs.gen_complete(v, max_weight, seed)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    g = make_graph(args.family, args.v, args.e, args.outdeg, args.max_weight, args.seed)
    out = args.out or f"{args.family}_v{args.v}_s{args.seed}.txt"
    graphs.save_edge_list(g, out)
    _emit({"family": args.family, "v": g.vertex_count, "e": g.edge_count, "outdeg": args.outdeg,
           "max_weight": args.max_weight, "seed": args.seed, "max_out_degree": g.max_out_degree(),
           "out": str(out)})
    return 0


# ---------------------------------------------------------------- sssp


def run_sssp(g, algo: str, source: int, d: int | None, workers: int, debug: bool = False) -> tuple[np.ndarray, dict]:
    """Run one solver; returns (distances, record) with timing and counters."""
    d = d or max(1, g.max_out_degree())
    rec = {"schema": REPORT_SCHEMA, "algorithm": algo, "v": g.vertex_count, "e": g.edge_count,
           "source": source, "d": d if algo == "pardijkstra" else None,
           "workers": workers if algo == "pardijkstra" else 1}
    t = time.perf_counter()
    if algo == "pardijkstra":
        res = sssp.par_dijkstra(g, source, EngineConfig(d=d, workers=workers, debug_assertions=debug))
        dist = res.dist
        m = res.metrics
        rec.update(touches=m.total_touches, resolves=sum(m.resolves_per_level), rounds=res.rounds,
                   bulk_updates=res.bulk_updates)
    elif algo == "dijkstra":
        res = sssp.reference_dijkstra(g, source)
        dist = res.dist
        rec.update(rounds=res.rounds)
    elif algo == "bellmanford":
        res = sssp.bellman_ford(g, source)
        dist = res.dist
        rec.update(rounds=res.rounds)
    else:
        dist = sssp.floyd_warshall(g)[source]
    rec["wall_ms"] = round((time.perf_counter() - t) * 1e3, 3)
    rec["checksum"] = sssp.distance_checksum(dist)
    rec["reachable"] = int(np.count_nonzero(dist != sssp.UNREACHABLE))
    return dist, rec


def cmd_sssp(args) -> int:
    g = graphs.load_edge_list(args.graph)
    if not 0 <= args.source < g.vertex_count:
        raise UsageError(f"source {args.source} out of range for V={g.vertex_count}")
    dist, rec = run_sssp(g, args.algo, args.source, args.d, args.workers, args.debug)
    rec["graph"] = str(args.graph)
    if args.out:
        Path(args.out).write_text(sssp.format_distances(dist))
    if args.report:
        with open(args.report, "a") as fh:
            _emit(rec, fh)
    _emit(rec)
    return 0


# ---------------------------------------------------------------- trace


def cmd_trace(args) -> int:
    trace = load_trace(args.trace)
    lines = []
    t = time.perf_counter()
    if args.oracle:
        trace.validate()
        try:
            pairs = ReferenceQueue().apply(trace)
        except EmptyHeapError as exc:
            raise DataError(f"trace extracts from an empty queue: {exc}") from None
        metrics = {"schema": "parbucket.metrics/1", "ops": len(trace), "oracle": True,
                   "wall_ms": (time.perf_counter() - t) * 1e3}
    else:
        cfg = EngineConfig(d=args.d, workers=args.workers, debug_assertions=args.debug)
        with Engine(cfg) as eng:
            v, p = eng.run_trace(trace)
            metrics = eng.snapshot_metrics().to_dict()
        pairs = zip(v.tolist(), p.tolist())
    lines = [f"{a} {b}" for a, b in pairs]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    _emit(metrics)
    return 0


# ---------------------------------------------------------------- simulate


def _durations(text: str):
    if text == "pow4":
        return lambda i: 4 ** i
    if text == "unit":
        return lambda i: 1
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError("--durations must be pow4, unit or a comma list of integers") from None
    if any(x < 1 for x in vals):
        raise UsageError("durations must be >= 1")
    return lambda i: vals[min(i, len(vals) - 1)]


def cmd_simulate(args) -> int:
    if args.n_ops < 1:
        raise UsageError("--n-ops must be >= 1")
    trace = lockstep_simulate(args.n_ops, _durations(args.durations))
    shown = trace
    if args.max_level is not None:
        shown = type(trace)([e for e in trace.events if e.level <= args.max_level])
    csv_text = shown.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(f"verify: {'PASS' if verify_schedule(trace) else 'FAIL'}")
    if args.durations == "pow4":
        ok = all(e.start == closed_form_start(e.level, e.k) for e in shown.events)
        print(f"closed-form: {'PASS' if ok else 'FAIL'}")
    return 0


# ---------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    algos = args.algos.split(",")
    for a in algos:
        if a not in ALGOS:
            raise UsageError(f"unknown algorithm {a!r}")
    try:
        densities = [int(x) for x in args.densities.split(",")]
    except ValueError:
        raise UsageError("--densities must be a comma list of integers") from None
    records = []
    # compile and load every solver once so the first measurement is not a cold start
    warm = graphs.gen_high_diameter(16, 32, 10, 0)
    for algo in algos:
        run_sssp(warm, algo, 0, None, args.workers)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for dens in densities:
            if args.family == "dag":
                g = make_graph("dag", args.v, None, min(dens, args.v - 1), args.max_weight, args.seed)
            elif args.family == "complete":
                g = make_graph("complete", args.v, None, None, args.max_weight, args.seed)
            else:
                e = min(args.v * dens, args.v * (args.v - 1))
                g = make_graph(args.family, args.v, e, None, args.max_weight, args.seed)
            sums = set()
            for algo in algos:
                if algo == "floydwarshall" and g.vertex_count > sssp.FW_MAX_VERTICES:
                    continue
                _, rec = run_sssp(g, algo, 0, args.d, args.workers)
                rec.update(family=args.family, density=dens, seed=args.seed)
                sums.add(rec["checksum"])
                records.append(rec)
                _emit(rec, out)
            if len(sums) > 1:
                raise InvariantError(f"solvers disagree on {args.family} density {dens}")
    finally:
        if args.out:
            out.close()
    # wall-time growth from the sparsest to the densest graph, per algorithm
    trend = {}
    for algo in algos:
        ws = [r["wall_ms"] for r in records if r["algorithm"] == algo]
        if len(ws) >= 2 and ws[0] > 0:
            trend[algo] = round(ws[-1] / ws[0], 3)
    _emit({"schema": REPORT_SCHEMA, "summary": "wall_ms ratio densest/sparsest", "trend": trend})
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="parbucket", description="Bucket-heap priority queue and shortest-path tools.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a graph as an edge list")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--v", type=int, required=True)
    g.add_argument("--e", type=int)
    g.add_argument("--outdeg", type=int)
    g.add_argument("--max-weight", type=int, default=graphs.DEFAULT_MAX_WEIGHT)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sssp", help="shortest paths from one source")
    s.add_argument("graph")
    s.add_argument("--algo", choices=ALGOS, default="pardijkstra")
    s.add_argument("--source", type=int, default=0)
    s.add_argument("--d", type=int, help="batch parameter (default: max out-degree)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--debug", action="store_true")
    s.add_argument("--out", help="write vertex,dist CSV here")
    s.add_argument("--report", help="append the JSON record to this file")
    s.set_defaults(func=cmd_sssp)

    t = sub.add_parser("trace", help="replay an operation trace")
    t.add_argument("trace")
    t.add_argument("--d", type=int, default=4)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--debug", action="store_true")
    t.add_argument("--oracle", action="store_true", help="replay on the reference binary heap instead")
    t.add_argument("--out", help="write extractions here instead of standard output")
    t.set_defaults(func=cmd_trace)

    m = sub.add_parser("simulate", help="lockstep resolve schedule as CSV")
    m.add_argument("--n-ops", type=int, required=True)
    m.add_argument("--max-level", type=int)
    m.add_argument("--durations", default="pow4", help="pow4, unit, or comma list per level")
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="wall-time sweep over graph density")
    b.add_argument("--family", choices=FAMILIES, default="highdiam")
    b.add_argument("--v", type=int, default=1024)
    b.add_argument("--densities", default="2,4,8,16", help="edges per vertex (out-degree for dag)")
    b.add_argument("--algos", default="pardijkstra,dijkstra,bellmanford")
    b.add_argument("--d", type=int)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--max-weight", type=int, default=graphs.DEFAULT_MAX_WEIGHT)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("d", "workers"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            parser.error(f"--{name} must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"parbucket: error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"parbucket: internal invariant failure: {exc}", file=sys.stderr)
        if exc.metrics is not None:
            print(exc.metrics.to_json(), file=sys.stderr)
        return 3
    except (ParBucketError, OSError) as exc:
        print(f"parbucket: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
