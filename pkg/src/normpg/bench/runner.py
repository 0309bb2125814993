"""Seeded experiment fan-out, CSV telemetry and run manifests."""
from __future__ import annotations

import json
import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np

from .. import __version__
from ..optimizers import PolicyGradientOracle, RunRecord, run_single
from ..core import horizon
from .config import ExperimentConfig, worker_count

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "t", "system_probes", "mean_return", "discounted_return_est",
    "step_len", "dir_norm", "grad_norm_est",
)
_INT_COLUMNS = {"t", "system_probes"}


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def gamma_label(gamma0: Optional[float]) -> str:
    return "theory" if gamma0 is None else format(gamma0, "g")


def csv_name(algorithm: str, gamma0: Optional[float], seed: int) -> str:
    return f"{algorithm}__g{gamma_label(gamma0)}__s{seed}.csv"


def record_to_csv(record: RunRecord) -> str:
    cols = [record[c] for c in CSV_COLUMNS]
    lines = [",".join(CSV_COLUMNS)]
    for i in range(len(record)):
        cells = []
        for name, col in zip(CSV_COLUMNS, cols):
            cells.append(str(int(col[i])) if name in _INT_COLUMNS else format_float(col[i]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_csv(path) -> dict:
    """Load a run CSV into a column dictionary."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=np.float64)
    data = np.atleast_1d(data)
    return {name: data[name] for name in data.dtype.names}


def _finite_or_none(x):
    x = float(x)
    return x if np.isfinite(x) else None


class RunTask(NamedTuple):
    config: ExperimentConfig
    algorithm: str
    gamma0: Optional[float]
    seed: int


def execute(task: RunTask) -> RunRecord:
    """Build the objects described by the config and run one seed."""
    cfg = task.config
    env = cfg.build_env()
    policy = cfg.build_policy(env)
    schedule = cfg.schedule_for(task.algorithm, task.gamma0, env, policy)
    if cfg.is_synth:
        oracle, dim = env, env.dim
    else:
        oracle, dim = PolicyGradientOracle(env, policy, horizon(schedule)), policy.dim
    theta0 = cfg.initial_theta(dim)
    try:
        record = run_single(task.algorithm, oracle, schedule, theta0, task.seed,
                            cfg.batch_size, cfg.split_batch)
    except (FloatingPointError, OverflowError) as exc:
        # a failing run is reported in the manifest rather than ending the sweep
        empty = {c: np.zeros(0) for c in CSV_COLUMNS}
        record = RunRecord(task.algorithm, task.seed, empty, f"error: {exc}")
    record.meta.update(gamma0=task.gamma0, horizon=horizon(schedule) if not cfg.is_synth else 1)
    return record


def _map(tasks: List[RunTask], workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [execute(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output never depends on scheduling
        return list(pool.map(execute, tasks))


class ExperimentResult(NamedTuple):
    out_dir: Path
    records: List[RunRecord]
    manifest: dict

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)


def run_experiment(cfg: ExperimentConfig, out_dir=None, gamma0_grid=None,
                   workers: Optional[int] = None) -> ExperimentResult:
    """Run every (algorithm, gamma0, seed) of the config and write CSVs plus a manifest.

    ``gamma0_grid`` replaces the per-algorithm gamma0 lists (used by sweeps).
    """
    out_dir = Path(out_dir) if out_dir is not None else cfg.output
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    workers = worker_count() if workers is None else workers
    tasks = [RunTask(cfg, a, g, s) for a, g, s in cfg.runs(gamma0_grid)]
    log.info("running %d runs with %d worker(s)", len(tasks), workers)
    records = _map(tasks, workers)

    entries = []
    for task, rec in zip(tasks, records):
        name = csv_name(task.algorithm, task.gamma0, task.seed)
        (runs_dir / name).write_text(record_to_csv(rec))
        entries.append({
            "file": f"runs/{name}",
            "algorithm": task.algorithm,
            "gamma0": task.gamma0,
            "seed": task.seed,
            "status": rec.status,
            "iterations": len(rec),
            "horizon": rec.meta.get("horizon"),
            "final_mean_return": _finite_or_none(rec["mean_return"][-1]) if len(rec) else None,
        })
        if not rec.ok:
            log.warning("%s failed: %s", name, rec.status)
    manifest = {
        "name": cfg.name,
        "config_hash": cfg.config_hash(),
        "config": cfg.raw,
        "versions": {
            "normpg": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "batch_size": cfg.batch_size,
        "T": cfg.T,
        "runs": entries,
        "failed": sum(not r.ok for r in records),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(out_dir, records, manifest)


def run_sweep(cfg: ExperimentConfig, out_dir=None, workers: Optional[int] = None) -> ExperimentResult:
    """Run the config over the sweep gamma0 grid (13 values by default)."""
    return run_experiment(cfg, out_dir, cfg.sweep["gamma0"], workers)
