"""Command-line workbench: ``nnchain gen | solve | oracle | compare | params | bench | render``.

Exit codes: 0 success, 2 validation error, 3 oracle mismatch,
4 infeasible or degenerate input.  ``NNC_SEED`` overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import cover as cv
from .geom import LpMetric
from .instances import KINDS, canonical_json, generate, load_instance
from .matching import MatchStats, narcissistic_match, random_instance
from .mftsp import ChainStats, mftsp_snnc
from .motorcycle import DegenerateInputError, MotorcycleStats, motorcycle_graph, random_motorcycles
from .params import Arity, analytic_2d_l2, falsify_params, find_params, DEFAULT_SAMPLES, EPS_PHI, PHI
from .runner import ALGORITHMS, ORACLE, KindMismatch, run
from .steiner import DisconnectedError
from .svg import render

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH, EXIT_INFEASIBLE = 0, 2, 3, 4
BENCH_HEADER = ["kind", "n", "seed", "time_median", "iterations", "queries", "merges", "bound", "within_bound"]


class UsageError(ValueError):
    pass


def _seed(args):
    env = os.environ.get("NNC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"NNC_SEED must be an integer, got {env!r}") from None
    return args.seed


def _value(text):
    if text in ("inf", "Infinity"):
        return math.inf
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _params(pairs):
    out = {}
    for item in pairs or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"generator parameter {item!r} is not key=value")
        out[key] = _value(val)
    return out


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_instance(path):
    return load_instance(Path(path).read_text())


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    inst = generate(args.kind, _seed(args), **_params(args.param))
    _emit(canonical_json(inst) + "\n", args.out)
    return EXIT_OK


def _report(args, algorithm, oracle):
    inst = _read_instance(args.file)
    rep = run(inst, algorithm, oracle=oracle)
    _emit(canonical_json(rep) + "\n", args.out)
    if getattr(args, "svg", None):
        Path(args.svg).write_text(render(inst.kind, inst.payload, rep.result))
    return EXIT_MISMATCH if rep.verdict == "mismatch" else EXIT_OK


def cmd_solve(args):
    return _report(args, args.algorithm, args.oracle)


def cmd_oracle(args):
    inst = _read_instance(args.file)
    return _report(args, ORACLE[inst.kind], False)


def cmd_compare(args):
    inst = _read_instance(args.file)
    rep = run(inst, args.algorithm, oracle=True)
    summary = {"algorithm": rep.algorithm, "oracle": rep.oracle["algorithm"], "verdict": rep.verdict,
               "instance_digest": rep.instance_digest, "counters": rep.counters}
    _emit(canonical_json(summary) + "\n", args.out)
    return EXIT_MISMATCH if rep.verdict == "mismatch" else EXIT_OK


def cmd_params(args):
    p = math.inf if args.p == "inf" else float(args.p)
    metric = LpMetric(p, args.dim)
    arity = Arity(args.arity)
    seed = _seed(args)
    if args.analytic:
        if (metric.p, metric.dim, arity) != (2.0, 2, Arity.TWO):
            raise UsageError("the analytic constant exists only for the 2D Euclidean two-way case")
        vp = analytic_2d_l2()
    else:
        vp = find_params(metric, arity, samples=args.samples, seed=seed, use_table=not args.no_table)
    out = {"metric": {"p": args.p, "dim": args.dim}, "params": vp.to_dict(), "seed": seed,
           "samples": vp.certificate.samples}
    if (metric.p, metric.dim) == (2.0, 2):
        out["analytic"] = {"epsilon_phi": EPS_PHI, "phi": PHI, "holds": (1 + EPS_PHI * (1 - 1e-6)) ** 10 < PHI}
    if args.falsify:
        res = falsify_params(vp, metric, effort=args.falsify, seed=seed)
        out["falsification"] = {"effort": args.falsify, "seed": seed,
                                "outcome": "Falsified" if res else "Unfalsified"}
    _emit(canonical_json(out) + "\n", args.out)
    return EXIT_MISMATCH if args.falsify and out["falsification"]["outcome"] == "Falsified" else EXIT_OK


def _bench_one(kind, n, seed, exact):
    """(time, iterations, queries, merges, bound, within) for one instance."""
    rng = np.random.default_rng([seed, n])
    if kind == "tsp":
        pts = rng.uniform(0, 1, size=(n, 2))
        st = ChainStats()
        t0 = time.perf_counter()
        mftsp_snnc(pts, LpMetric(2, 2), exact=exact, stats=st)
        dt = time.perf_counter() - t0
        return dt, st.iterations, st.queries, 0, 3 * n - 3, st.iterations <= 3 * n - 3
    if kind == "cover":
        inst = cv.random_cover_instance(n, max(n // 4, 1), rng, span=float(n), min_gap=0.0)
        st = cv.CoverStats()
        t0 = time.perf_counter()
        cv.cover_nnc(inst, stats=st)
        dt = time.perf_counter() - t0
        bound = inst.n + inst.m - 1
        return dt, st.iterations, 0, st.merges, bound, st.merges == bound
    if kind == "motorcycle":
        mcs = random_motorcycles(n, rng)
        st = MotorcycleStats()
        t0 = time.perf_counter()
        motorcycle_graph(mcs, stats=st)
        dt = time.perf_counter() - t0
        return dt, st.iterations, st.queries, 0, 3 * n, st.queries <= 3 * n
    if kind == "matching":
        left, right = random_instance(n, 2, rng) if n <= 300 else (rng.uniform(0.05, 1, (n, 2)), rng.uniform(0.05, 1, (n, 2)))
        st = MatchStats()
        t0 = time.perf_counter()
        narcissistic_match(left, right, stats=st)
        dt = time.perf_counter() - t0
        return dt, st.iterations, st.queries, st.matches, n, st.matches == n
    raise UsageError(f"unknown bench kind {kind!r}")


def bench_rows(kind, sizes, seeds, repeats=5, exact=True):
    rows = []
    for n in sizes:
        for seed in range(seeds):
            runs = [_bench_one(kind, n, seed, exact) for _ in range(repeats)]
            _, it, q, mg, bound, ok = runs[0]
            med = statistics.median(r[0] for r in runs)
            rows.append([kind, n, seed, f"{med:.6f}", it, q, mg, bound, int(ok)])
    return rows


def cmd_bench(args):
    try:
        sizes = [int(float(s)) for s in args.sizes.split(",") if s]
    except ValueError:
        raise UsageError(f"sizes must be a comma-separated list of integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 1:
        raise UsageError("sizes must be positive")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    w.writerows(bench_rows(args.kind, sizes, args.seeds, args.repeats, exact=not args.approximate))
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_render(args):
    inst = _read_instance(args.file)
    result = None
    if args.report:
        result = json.loads(Path(args.report).read_text())["result"]
    _emit(render(inst.kind, inst.payload, result), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser():
    algos = sorted({a for t in ALGORITHMS.values() for a in t})
    ap = argparse.ArgumentParser(prog="nnchain", description="Nearest-neighbor chain workbench.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance file")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("--param", "-p", action="append", metavar="KEY=VALUE",
                   help="generator parameter, e.g. n=50 dim=3 p=inf (repeatable)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run an algorithm on an instance file")
    s.add_argument("file")
    s.add_argument("--algorithm", "-a", choices=algos)
    s.add_argument("--oracle", action="store_true", help="also run the oracle and record a verdict")
    s.add_argument("--svg", help="write a drawing of the result")
    s.add_argument("--out", "-o")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="run the brute-force oracle for the instance kind")
    o.add_argument("file")
    o.add_argument("--out", "-o")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="run algorithm and oracle, print the verdict")
    c.add_argument("file")
    c.add_argument("--algorithm", "-a", choices=algos)
    c.add_argument("--out", "-o")
    c.set_defaults(func=cmd_compare)

    p = sub.add_parser("params", help="certified (epsilon, k) for a metric")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--p", default="2", help="L_p exponent or 'inf'")
    p.add_argument("--arity", choices=[a.value for a in Arity], default=Arity.TWO.value)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--analytic", action="store_true", help="2D Euclidean analytic constant")
    p.add_argument("--no-table", action="store_true", help="recompute instead of reading the stored table")
    p.add_argument("--falsify", type=int, default=0, metavar="STEPS", help="run the falsifier for STEPS moves")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_params)

    b = sub.add_parser("bench", help="timing CSV over sizes and seeds")
    b.add_argument("kind", choices=["tsp", "cover", "motorcycle", "matching"])
    b.add_argument("--sizes", default="1000,2000,4000")
    b.add_argument("--seeds", type=int, default=1)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--approximate", action="store_true", help="tsp: use the certified soft index instead of exact")
    b.add_argument("--out", "-o")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="draw an instance (and optionally a report) as SVG")
    r.add_argument("file")
    r.add_argument("--report")
    r.add_argument("--out", "-o")
    r.set_defaults(func=cmd_render)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, UsageError, KindMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (cv.InfeasibleError, DegenerateInputError, DisconnectedError) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
