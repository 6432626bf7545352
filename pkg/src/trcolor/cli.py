"""Command line entry point: ``trcolor <subcommand> ...``.

Exit codes: 0 success, 1 error (a JSON object with ``error`` and
``message`` is printed), 2 when the output is valid but misses its size
target.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import graph as gr
from .lemmas import SUITES, run_suite
from .relaxation import SolverConfig
from .rounding import solve_3coloring, solve_max_is
from .spectral import random_walk_spectrum, threshold_rank
from .validation import check_scalar_in

EXIT_OK, EXIT_ERROR, EXIT_MISSED = 0, 1, 2
BENCH_COLUMNS = ("family", "n", "r", "eps", "delta", "mode", "coverage_fraction", "valid", "wall_ms", "seed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set, frozenset)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dump_json(obj):
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ builders


def build_family(family, parts=3, m=3, copies=2, cycle_n=4, t=5, delta=0.1, seed=0):
    """Return ``(graph, extra_metadata)`` for one of the named families."""
    if family == "multipartite":
        return gr.complete_multipartite(parts, m), {}
    if family == "union":
        return gr.disjoint_union([gr.complete_multipartite(parts, m)] * copies), {}
    if family == "blowup":
        return gr.blow_up(gr.cycle(cycle_n), t), {}
    if family == "perturbed":
        g, subset, coloring = gr.perturb_almost_colorable(gr.complete_multipartite(parts, m), delta, seed)
        # the rewired subset has ceil(delta n) vertices, so that is the budget the instance honours
        return g, {"perturbed_subset": list(subset), "reference_coloring": list(coloring),
                   "almost_colorable_delta": len(subset) / g.n}
    raise ValueError(f"unknown family {family!r}")


def spectrum_summary(g, head=5, tail=3):
    w = random_walk_spectrum(g).to_list()
    return {
        "head": w[:head],
        "tail": w[-tail:],
        "threshold_rank": {str(e): threshold_rank(w, e) for e in (0.1, 0.01, 0.001)},
    }


# --------------------------------------------------------------- subcommands


def cmd_generate(args):
    params = {"parts": args.parts, "m": args.m}
    if args.family == "union":
        params["copies"] = args.copies
    elif args.family == "blowup":
        params = {"cycle_n": args.cycle_n, "t": args.t}
    elif args.family == "perturbed":
        params.update(delta=args.delta, seed=args.seed)
    g, extra = build_family(args.family, **params)
    text = gr.dumps(g)
    if not args.out:
        sys.stdout.write(text)
        return EXIT_OK
    gr.write_graph(g, args.out)
    out = Path(args.out)
    side = out.with_suffix(".json") if out.suffix != ".json" else out.with_name(out.name + ".meta.json")
    meta = {"family": args.family, "params": params, "n": g.n, "d": g.degree, "m": g.m,
            "spectrum": spectrum_summary(g), **extra}
    side.write_text(dump_json(meta), encoding="utf-8")
    return EXIT_OK


def cmd_analyze(args):
    g = gr.load_graph(args.graph)
    w = random_walk_spectrum(g).to_list()
    lam = args.eps / 100
    report = {
        "n": g.n,
        "d": g.degree,
        "m": g.m,
        "eps": args.eps,
        "lambda": lam,
        "spectrum_head": w[:5],
        "spectrum_tail": w[-5:],
        "threshold_rank_eps": threshold_rank(w, args.eps),
        "threshold_rank_lambda": threshold_rank(w, lam),
    }
    _emit(dump_json(report), args.out)
    return EXIT_OK


def _config(args):
    return SolverConfig(tolerance=args.tol, max_iter=args.max_iters)


def _report_text(rep):
    d = rep.to_dict()
    lines = [f"{k}: {d[k]}" for k in ("task", "mode", "n", "d", "eps", "delta", "lambda", "r", "global_correlation",
                                       "achieved", "target", "valid", "guarantee_met")]
    lines += [f"note: {x}" for x in rep.notes]
    return "\n".join(lines) + "\n"


def _report_csv(rep):
    d = rep.to_dict()
    cols = ("task", "mode", "n", "d", "eps", "delta", "lambda", "r", "global_correlation", "achieved", "target",
            "valid", "guarantee_met")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerow([d[c] for c in cols])
    return buf.getvalue()


def _run_pipeline(args, solver):
    g = gr.load_graph(args.graph)
    kw = dict(eps=args.eps, delta=args.delta, mode=args.mode, config=_config(args), rounds=args.rounds,
              samples=args.samples, seed=args.seed)
    if solver is solve_3coloring:
        kw["gamma"] = args.gamma
    rep = solver(g, **kw)
    if args.format == "json":
        text = dump_json(rep.to_dict())
    elif args.format == "csv":
        text = _report_csv(rep)
    else:
        text = _report_text(rep)
    _emit(text, args.out)
    if not rep.valid:
        return EXIT_ERROR
    return EXIT_OK if rep.guarantee_met else EXIT_MISSED


def cmd_color(args):
    return _run_pipeline(args, solve_3coloring)


def cmd_mis(args):
    return _run_pipeline(args, solve_max_is)


def cmd_lemma_check(args):
    res = run_suite(args.which, args.trials, args.seed)
    _emit(dump_json(res.to_dict()), args.out)
    return EXIT_OK if res.passed else EXIT_ERROR


# --------------------------------------------------------------------- bench

_ROW_DEFAULTS = {"family": "multipartite", "task": "color", "parts": 3, "m": 3, "copies": 2, "cycle_n": 4, "t": 5,
                 "perturb": 0.1, "eps": 0.1, "delta": 0.0, "mode": "auto", "seed": 0, "rounds": None,
                 "samples": 200}


def expand_sweep(spec):
    """Cartesian product over list-valued fields, in key order; ``spec`` may be a list of such objects."""
    blocks = spec if isinstance(spec, list) else [spec]
    rows = []
    for block in blocks:
        if not isinstance(block, dict):
            raise ValueError("sweep entries must be JSON objects")
        unknown = set(block) - set(_ROW_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown sweep keys {sorted(unknown)}")
        keys = list(block)
        values = [v if isinstance(v, list) else [v] for v in block.values()]
        for combo in itertools.product(*values):
            rows.append({**_ROW_DEFAULTS, **dict(zip(keys, combo))})
    return rows


def run_bench_row(row, timing=True):
    out = {"family": row["family"], "n": "", "r": "", "eps": row["eps"], "delta": row["delta"], "mode": row["mode"],
           "coverage_fraction": "", "valid": "", "wall_ms": "", "seed": row["seed"]}
    t0 = time.perf_counter()
    try:
        g, _ = build_family(row["family"], row["parts"], row["m"], row["copies"], row["cycle_n"], row["t"],
                            row["perturb"], row["seed"])
        out["n"] = g.n
        solver = solve_3coloring if row["task"] == "color" else solve_max_is
        rep = solver(g, eps=row["eps"], delta=row["delta"], mode=row["mode"], rounds=row["rounds"],
                     samples=row["samples"], seed=row["seed"])
        out.update(r=rep.r, mode=rep.mode, coverage_fraction=f"{rep.achieved / g.n:.6f}", valid=rep.valid)
    except Exception as exc:  # recorded in-row, the sweep continues
        out["valid"] = f"error:{type(exc).__name__}"
    if timing:
        out["wall_ms"] = f"{(time.perf_counter() - t0) * 1000:.1f}"
    return out


def cmd_bench(args):
    spec = json.loads(Path(args.sweep).read_text() if Path(args.sweep).is_file() else args.sweep)
    rows = expand_sweep(spec)
    timing = not args.no_timing
    if args.jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(run_bench_row, rows, [timing] * len(rows)))
    else:
        results = [run_bench_row(r, timing) for r in rows]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(results)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _add_solver_flags(p, eps_default):
    p.add_argument("graph", help="edge-list or DIMACS file")
    p.add_argument("--eps", type=float, default=eps_default)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mode", choices=("auto", "exact", "sdp"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", default=None)


def build_parser():
    parser = _Parser(prog="trcolor", description="Coloring and independent sets on low threshold-rank graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a test graph and a JSON sidecar")
    p.add_argument("family", choices=("multipartite", "blowup", "union", "perturbed"))
    p.add_argument("--parts", type=int, default=3)
    p.add_argument("--m", type=int, default=3, help="part size")
    p.add_argument("--copies", type=int, default=2)
    p.add_argument("--cycle-n", type=int, default=4)
    p.add_argument("--t", type=int, default=5, help="blow-up factor")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="spectrum summary and threshold rank")
    p.add_argument("graph")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("color", help="partial 3-coloring")
    _add_solver_flags(p, 0.1)
    p.add_argument("--gamma", type=float, default=0.001)
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("mis", help="large independent set")
    _add_solver_flags(p, 0.2)
    p.set_defaults(func=cmd_mis)

    p = sub.add_parser("lemma-check", help="run a randomized inequality suite")
    p.add_argument("which", choices=SUITES)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lemma_check)

    p = sub.add_parser("bench", help="run a parameter sweep and write CSV")
    p.add_argument("--sweep", required=True, help="JSON object/list, inline or a file path")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for reproducible output")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def _validate(args):
    if hasattr(args, "eps"):
        check_scalar_in("eps", args.eps, 0, 1)
    if args.command in ("color", "mis"):
        check_scalar_in("delta", args.delta, 0, 1 if args.command == "color" else 0.5, low_closed=True,
                        high_closed=args.command == "color")
        check_scalar_in("tol", args.tol, 0, 1)
        for name in ("samples", "max_iters"):
            if getattr(args, name) < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")
        if args.rounds is not None and args.rounds < 2:
            raise ValueError("--rounds must be at least 2")
    if args.command == "generate":
        check_scalar_in("delta", args.delta, 0, 1, low_closed=True)
    if args.command == "bench" and args.jobs < 1:
        raise ValueError("--jobs must be positive")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        return args.func(args)
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        report = getattr(exc, "report", None)
        if isinstance(report, dict):
            err["report"] = report
        sys.stdout.write(dump_json(err))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
