"""Quantile aggregation across seeds, SVG learning curves and step-size robustness reports.

Quantiles use the nearest-rank convention: the q-quantile of n values is the
``ceil(q n)``-th smallest (numpy's ``inverted_cdf`` method), so every reported
value is one of the observed traces.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .runner import format_float, gamma_label, read_csv

QUANTILES = (0.25, 0.5, 0.75)


class AggregateError(ValueError):
    pass


def nearest_rank(values: np.ndarray, qs: Sequence[float] = QUANTILES) -> np.ndarray:
    """Quantiles over axis 0 of an ``(n_seeds, T)`` array; returns ``(len(qs), T)``."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] < 1:
        raise AggregateError("need at least one run")
    return np.quantile(values, list(qs), axis=0, method="inverted_cdf")


class CurveSummary(NamedTuple):
    algorithm: str
    gamma0: Optional[float]
    t: np.ndarray
    system_probes: np.ndarray
    quantiles: np.ndarray  # (3, T): q25, median, q75
    n_runs: int
    traces: np.ndarray  # (n_runs, T), ordered by seed


def _load_groups(run_dir: Path) -> Dict[Tuple[str, Optional[float]], List[Tuple[int, Path]]]:
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise AggregateError(f"no manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    groups: Dict[Tuple[str, Optional[float]], List[Tuple[int, Path]]] = {}
    for entry in manifest["runs"]:
        if entry["status"] != "ok":
            continue
        key = (entry["algorithm"], entry["gamma0"])
        groups.setdefault(key, []).append((int(entry["seed"]), run_dir / entry["file"]))
    if not groups:
        raise AggregateError("no successful runs to aggregate")
    return groups


def summarize(run_dir, metric: str = "mean_return") -> List[CurveSummary]:
    """Per (algorithm, gamma0) quantile curves of ``metric`` across seeds."""
    run_dir = Path(run_dir)
    out = []
    for (alg, g0), members in _load_groups(run_dir).items():
        members.sort()  # seed order, so results do not depend on listing order
        tables = [read_csv(path) for _, path in members]
        if metric not in tables[0]:
            raise AggregateError(f"unknown metric {metric!r}")
        t = tables[0]["t"]
        probes = tables[0]["system_probes"]
        for tab in tables[1:]:
            if tab["t"].shape != t.shape or np.any(tab["t"] != t) or np.any(tab["system_probes"] != probes):
                raise AggregateError(f"mismatched iteration grids for {alg} gamma0={gamma_label(g0)}")
        traces = np.stack([tab[metric] for tab in tables])
        out.append(CurveSummary(alg, g0, t.astype(np.int64), probes.astype(np.int64),
                                nearest_rank(traces), len(tables), traces))
    out.sort(key=lambda c: (c.algorithm, -1.0 if c.gamma0 is None else c.gamma0))
    return out


def write_summary_csv(path, curves: Sequence[CurveSummary]) -> None:
    lines = ["algorithm,gamma0,t,system_probes,q25,median,q75"]
    for c in curves:
        g = gamma_label(c.gamma0)
        for i in range(len(c.t)):
            q = c.quantiles[:, i]
            lines.append(f"{c.algorithm},{g},{c.t[i]},{c.system_probes[i]},"
                         f"{format_float(q[0])},{format_float(q[1])},{format_float(q[2])}")
    Path(path).write_text("\n".join(lines) + "\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "normpg"
    return plt


def plot_curves(path, curves: Sequence[CurveSummary], metric: str, title: str = "") -> None:
    """Median line and interquartile band against system probes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for c in curves:
        label = c.algorithm if c.gamma0 is None else f"{c.algorithm} ($\\gamma_0$={gamma_label(c.gamma0)})"
        line, = ax.plot(c.system_probes, c.quantiles[1], lw=1.4, label=label)
        ax.fill_between(c.system_probes, c.quantiles[0], c.quantiles[2], color=line.get_color(), alpha=0.2, lw=0)
    ax.set_xlabel("system probes")
    ax.set_ylabel(metric)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def aggregate(run_dir, metric: str = "mean_return", out_svg=None, out_csv=None) -> List[CurveSummary]:
    """Summarize a run directory; write the summary CSV and the SVG plot."""
    run_dir = Path(run_dir)
    curves = summarize(run_dir, metric)
    out_csv = run_dir / f"summary_{metric}.csv" if out_csv is None else Path(out_csv)
    write_summary_csv(out_csv, curves)
    if out_svg is not None:
        plot_curves(out_svg, curves, metric)
    return curves


# ---------------------------------------------------------------------------
# step-size robustness

class RobustnessRow(NamedTuple):
    algorithm: str
    gamma0: Optional[float]
    probes_to_threshold: Tuple[float, float, float]  # q25, median, q75; inf when not reached
    average_metric: float  # mean over iterations and seeds


def first_crossing(trace: np.ndarray, probes: np.ndarray, threshold: float, window: int = 1) -> float:
    """System probes at the first iteration whose trailing ``window`` mean reaches ``threshold``."""
    if window > 1:
        kernel = np.ones(window) / window
        smooth = np.convolve(trace, kernel, mode="full")[: len(trace)]
        smooth[: window - 1] = -np.inf
    else:
        smooth = trace
    hit = np.nonzero(smooth >= threshold)[0]
    return float(probes[hit[0]]) if hit.size else math.inf


def robustness(curves: Sequence[CurveSummary], threshold: float, window: int = 1) -> List[RobustnessRow]:
    rows = []
    for c in curves:
        hits = np.array([first_crossing(tr, c.system_probes, threshold, window) for tr in c.traces])
        q = nearest_rank(hits[:, None])[:, 0]
        rows.append(RobustnessRow(c.algorithm, c.gamma0, tuple(float(x) for x in q), float(np.mean(c.traces))))
    return rows


def best_gamma0(rows: Sequence[RobustnessRow]) -> Dict[str, Optional[float]]:
    """Per algorithm, the gamma0 with the best average metric (ties go to the smaller gamma0)."""
    best: Dict[str, RobustnessRow] = {}
    for r in rows:
        cur = best.get(r.algorithm)
        if cur is None or r.average_metric > cur.average_metric:
            best[r.algorithm] = r
    return {alg: r.gamma0 for alg, r in best.items()}


def write_robustness(run_dir, rows: Sequence[RobustnessRow], threshold: float, out_svg=None) -> None:
    run_dir = Path(run_dir)
    lines = ["algorithm,gamma0,probes_q25,probes_median,probes_q75,average_metric"]
    for r in rows:
        p = r.probes_to_threshold
        lines.append(f"{r.algorithm},{gamma_label(r.gamma0)},{format_float(p[0])},{format_float(p[1])},"
                     f"{format_float(p[2])},{format_float(r.average_metric)}")
    (run_dir / "robustness.csv").write_text("\n".join(lines) + "\n")
    best = best_gamma0(rows)
    (run_dir / "best_gamma0.json").write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    if out_svg is None:
        return
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for alg in sorted({r.algorithm for r in rows}):
        sel = [r for r in rows if r.algorithm == alg and r.gamma0 is not None]
        if not sel:
            continue
        x = np.array([r.gamma0 for r in sel])
        q = np.array([r.probes_to_threshold for r in sel])
        line, = ax.plot(x, q[:, 1], marker="o", ms=3, lw=1.4, label=alg)
        ax.fill_between(x, q[:, 0], q[:, 2], color=line.get_color(), alpha=0.2, lw=0)
    ax.set_xscale("log")
    ax.set_xlabel("initial step size $\\gamma_0$")
    ax.set_ylabel(f"system probes to reach {threshold:g}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_svg, format="svg", metadata={"Date": None})
    plt.close(fig)
