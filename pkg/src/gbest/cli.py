"""Command-line entry point: ``gbest {simulate, bench grid, bench real, analyze, plot}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .bench.config import GridSpec, read_config
from .bench.plot import render_ci_plot, select
from .bench.regression import analyze_regression
from .bench.runner import read_results, run_grid, run_real
from .core import CsvSchema, SeededRngStream, write_csv
from .sim import SimConfig, simulate_dataset
from .tree import TreeParams


def _floats(s):
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.split(",") if v.strip())


def _names(s):
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _common(p, out_required=True):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", required=out_required, help="output file")


def _tree_args(p):
    p.add_argument("--B", type=int, help="trees per ensemble (default 100)")
    p.add_argument("--min-node-weight", type=float)
    p.add_argument("--max-depth", type=int)


def _tree_params(args, base: TreeParams) -> TreeParams:
    kw = {}
    if args.min_node_weight is not None:
        kw["min_node_weight"] = args.min_node_weight
    if args.max_depth is not None:
        kw["max_depth"] = args.max_depth
    return replace(base, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gbest", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one simulated dataset as CSV")
    _common(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--family", default="uniform(0,10)")
    p.add_argument("--cens", type=float, default=0.1)

    bench = sub.add_parser("bench", help="run benchmarks").add_subparsers(dest="bench_command", required=True)

    g = bench.add_parser("grid", help="simulation grid")
    _common(g)
    g.add_argument("--config", help="key = value config file with [grid] / [tree] sections")
    g.add_argument("--sizes", type=_ints)
    g.add_argument("--cens", type=_floats)
    g.add_argument("--weights", type=_floats)
    g.add_argument("--models", type=_names)
    g.add_argument("--reps", type=int)
    g.add_argument("--priors", type=_names)
    g.add_argument("--families", type=_names)
    g.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte-identical reruns)")
    _tree_args(g)

    r = bench.add_parser("real", help="k-fold cross-validation on a CSV file")
    _common(r)
    r.add_argument("--data", help="CSV path (default: bundled bladder data)")
    r.add_argument("--time-col", default="time")
    r.add_argument("--status-col", default="status")
    r.add_argument("--covariates", type=_names, default=())
    r.add_argument("--k", type=int, default=5)
    r.add_argument("--weights", type=_floats, default=(0.0, 0.1, 0.2))
    r.add_argument("--models", type=_names, default=("gbest_bsb", "cox", "rsf"))
    r.add_argument("--prior", default="uniform")
    r.add_argument("--timing", action="store_true")
    r.add_argument("--summary-out", help="per-model summary CSV")
    _tree_args(r)

    a = sub.add_parser("analyze", help="logit(IBS) regression with bootstrap intervals")
    _common(a, out_required=False)
    a.add_argument("results")
    a.add_argument("--reps", type=int, default=1000, help="bootstrap replicates")
    a.add_argument("--reference", default="gbest_bsb w=0.1")

    pl = sub.add_parser("plot", help="mean and interval chart (SVG)")
    _common(pl)
    pl.add_argument("results")
    pl.add_argument("--N", type=int)
    pl.add_argument("--cens", type=float)
    pl.add_argument("--prior")
    pl.add_argument("--family")
    pl.add_argument("--parametric", action="store_true", help="mean +/- 1.96 se instead of 5-95% quantiles")
    pl.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "simulate":
        cfg = SimConfig(n=args.n, p=args.p, covariate_family=args.family, target_censoring=args.cens,
                        seed=args.seed)
        d = simulate_dataset(cfg, SeededRngStream(args.seed))
        write_csv(d, args.out)
        print(f"wrote {d.n} rows ({d.censoring_fraction():.1%} censored) to {args.out}")
        return 0

    if args.command == "bench" and args.bench_command == "grid":
        spec = read_config(args.config) if args.config else GridSpec()
        overrides = {
            "sample_sizes": args.sizes, "censoring_levels": args.cens, "prior_weights": args.weights,
            "models": args.models, "replications": args.reps, "priors": args.priors,
            "covariate_families": args.families, "B": args.B,
        }
        spec = replace(spec, **{k: v for k, v in overrides.items() if v is not None})
        spec = replace(spec, tree_params=_tree_params(args, spec.tree_params))
        rows = run_grid(spec, args.seed, args.out, args.jobs, args.timing)
        failed = sum(1 for r in rows if r["ibs"] is None)
        print(f"wrote {len(rows)} rows to {args.out} (B={spec.B}, {spec.tree_params}); {failed} failed")
        return 0

    if args.command == "bench" and args.bench_command == "real":
        schema = None
        if args.data:
            schema = CsvSchema(args.time_col, args.status_col, tuple(args.covariates))
        tp = _tree_params(args, TreeParams())
        rows, summary = run_real(args.data, schema, args.k, args.models, args.weights, args.seed,
                                 args.B or 100, args.prior, tp, args.out, args.jobs, args.timing)
        print(f"{'model':20s}{'avg_IBS':>9s}{'sd_IBS':>9s}{'ci_low':>9s}{'ci_high':>9s}")
        for s in summary:
            print(f"{s.label:20s}{s.mean:9.3f}{s.sd:9.3f}{s.lower:9.3f}{s.upper:9.3f}")
        if args.summary_out:
            with open(args.summary_out, "w", encoding="utf-8") as fh:
                fh.write("model,avg_ibs,sd_ibs,ci_low,ci_high,folds\n")
                for s in summary:
                    fh.write(f"{s.label},{s.mean!r},{s.sd!r},{s.lower!r},{s.upper!r},{s.folds}\n")
        return 0

    if args.command == "analyze":
        rows = read_results(args.results)
        report = analyze_regression(rows, args.reps, SeededRngStream(args.seed), args.reference)
        print(report.to_text())
        if args.out:
            report.write_csv(args.out)
        return 0

    if args.command == "plot":
        rows = select(read_results(args.results), N=args.N, cens_target=args.cens, prior=args.prior,
                      cov_family=args.family)
        svg = render_ci_plot(rows, args.parametric, args.title)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(f"wrote {args.out}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
