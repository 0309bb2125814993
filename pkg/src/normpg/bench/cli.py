"""Command-line front end: ``normpg {run,sweep,aggregate,check,constants}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from ..estimators import estimator_constants
from .aggregate import AggregateError, aggregate, best_gamma0, plot_curves, robustness, write_robustness
from .checks import SUITES, run_suite
from .config import ConfigError, load_config
from .runner import run_experiment, run_sweep


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, args.out)
    curves = aggregate(result.out_dir, args.metric, result.out_dir / f"{args.metric}.svg")
    print(f"wrote {len(result.records)} runs and {len(curves)} curves to {result.out_dir}")
    return 0 if result.ok else 1


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    result = run_sweep(cfg, args.out)
    metric = cfg.sweep.get("metric", args.metric)
    curves = aggregate(result.out_dir, metric)
    threshold = cfg.sweep.get("threshold")
    window = int(cfg.sweep.get("window", 1))
    rows = robustness(curves, -math.inf if threshold is None else float(threshold), window)
    write_robustness(result.out_dir, rows, threshold if threshold is not None else -math.inf,
                     result.out_dir / "robustness.svg" if threshold is not None else None)
    best = best_gamma0(rows)
    best_curves = [c for c in curves if best.get(c.algorithm) == c.gamma0]
    plot_curves(result.out_dir / f"{metric}_best.svg", best_curves, metric, "best initial step size per algorithm")
    for alg, g in sorted(best.items()):
        print(f"best gamma0 for {alg}: {g}")
    return 0 if result.ok else 1


def _cmd_aggregate(args) -> int:
    curves = aggregate(args.dir, args.metric, args.out, args.summary)
    print(f"aggregated {sum(c.n_runs for c in curves)} runs into {len(curves)} curves")
    return 0


def _cmd_check(args) -> int:
    results = []
    for r in run_suite(args.suite):
        print(r.line(), flush=True)
        results.append(r)
    failed = sum(not r.passed for r in results)
    report = {"suite": args.suite, "passed": failed == 0, "failed": failed,
              "checks": [r.as_dict() for r in results]}
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def _cmd_constants(args) -> int:
    c = estimator_constants(args.Mg, args.Mh, args.l2, args.rmax, args.gamma, args.H)
    print(json.dumps(c._asdict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="normpg", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every algorithm/gamma0/seed of a config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: the config's output)")
    r.add_argument("--metric", default="mean_return")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="run a config over its gamma0 grid and report robustness")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--metric", default="mean_return")
    s.set_defaults(func=_cmd_sweep)

    a = sub.add_parser("aggregate", help="quantile curves of a run directory")
    a.add_argument("dir")
    a.add_argument("--metric", default="mean_return")
    a.add_argument("--out", required=True, help="SVG path")
    a.add_argument("--summary", help="summary CSV path (default: <dir>/summary_<metric>.csv)")
    a.set_defaults(func=_cmd_aggregate)

    c = sub.add_parser("check", help="run a self-check suite")
    c.add_argument("suite", choices=sorted(SUITES) + ["all"])
    c.add_argument("--report", help="write a JSON report here")
    c.set_defaults(func=_cmd_check)

    k = sub.add_parser("constants", help="smoothness, variance and truncation constants")
    k.add_argument("--Mg", type=float, required=True)
    k.add_argument("--Mh", type=float, required=True)
    k.add_argument("--l2", type=float, default=0.0)
    k.add_argument("--rmax", type=float, required=True)
    k.add_argument("--gamma", type=float, required=True, help="discount factor")
    k.add_argument("--H", type=int, required=True, help="horizon")
    k.set_defaults(func=_cmd_constants)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, AggregateError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
