"""Experiment configuration files (TOML); the schema is documented in docs/config.md."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import tomli

from ..core import Kind, ScheduleSpec, horizon
from ..envs import make_env
from ..estimators import estimator_constants
from ..optimizers import resolve_algorithm
from ..policies import make_policy
from ..synth import SynthProblem

GAMMA0_GRID = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.75, 1.0, 2.0, 4.0)

_TOP_KEYS = {
    "name", "output", "T", "batch_size", "seeds", "horizon", "variant", "theta0",
    "algorithms", "gamma0", "split_batch", "env", "policy", "schedule", "sweep",
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    env: dict
    algorithms: List[str]
    T: int
    seeds: List[int]
    output: Path
    policy: Optional[dict] = None
    gamma0: Dict[str, List[Optional[float]]] = field(default_factory=dict)
    batch_size: int = 1
    horizon: Optional[int] = None
    variant: str = "main"
    theta0: object = 0.0
    split_batch: Optional[bool] = None
    schedule: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def is_synth(self) -> bool:
        return self.env.get("type") == "synth"

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- object construction (repeated inside worker processes) ----------

    def build_env(self):
        if self.is_synth:
            spec = {k: v for k, v in self.env.items() if k != "type"}
            return SynthProblem(**spec)
        return make_env(self.env)

    def build_policy(self, env):
        if self.is_synth:
            return None
        return make_policy(self.policy, env)

    def initial_theta(self, dim: int) -> np.ndarray:
        if isinstance(self.theta0, (int, float)):
            return np.full(dim, float(self.theta0))
        theta = np.asarray(self.theta0, dtype=np.float64)
        if theta.shape != (dim,):
            raise ConfigError(f"theta0 must have length {dim}")
        return theta

    def schedule_for(self, algorithm: str, gamma0: Optional[float], env=None, policy=None) -> ScheduleSpec:
        kind = resolve_algorithm(algorithm)
        sched = dict(self.schedule)
        if self.is_synth:
            mu = float(self.env.get("mu", 1.0))
            sched.setdefault("M_g", 1.0)
            sched.setdefault("mu_F", math.sqrt(2.0 * mu) * sched["M_g"])
            discount = float(sched.pop("discount", 0.99))
        else:
            discount = env.discount
            sched.pop("discount", None)
        spec = ScheduleSpec(kind, self.T, discount=discount, gamma0=gamma0, variant=self.variant,
                            horizon_override=self.horizon, **sched)
        if kind is Kind.HARPG and gamma0 is None and spec.sigma_g is None and policy is not None:
            bounds = policy.policy_bounds()
            if not bounds.bounded:
                raise ConfigError("HARPG without gamma0 needs a policy with finite bounds")
            c = estimator_constants(bounds.M_g, bounds.M_h, bounds.l_2, env.r_max, discount, horizon(spec))
            spec = spec.with_(sigma_g=c.sigma_g, L_g=c.L_g, D_h=c.D_h, M_g=bounds.M_g)
        return spec

    def runs(self, gamma0_grid=None) -> List[Tuple[str, Optional[float], int]]:
        """Every (algorithm, gamma0, seed) triple in a fixed order."""
        out = []
        for alg in self.algorithms:
            values = list(gamma0_grid) if gamma0_grid is not None else self.gamma0.get(alg, [None])
            for g0 in values:
                for seed in self.seeds:
                    out.append((alg, g0, seed))
        return out


def _gamma_list(value, where: str) -> List[Optional[float]]:
    if value is None or value == "theory":
        return [None]
    values = value if isinstance(value, list) else [value]
    out = []
    for v in values:
        if v == "theory":
            out.append(None)
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"{where}: gamma0 values must be positive numbers or 'theory'")
        out.append(float(v))
    return out


def parse_config(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("env", "algorithms", "T", "seeds"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    env = dict(raw["env"])
    if "type" not in env:
        raise ConfigError("env.type is required")
    is_synth = env["type"] == "synth"
    policy = raw.get("policy")
    if not is_synth and policy is None:
        raise ConfigError("a [policy] table is required for MDP environments")

    algorithms = []
    for name in raw["algorithms"]:
        try:
            algorithms.append(resolve_algorithm(name).value)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if len(set(algorithms)) != len(algorithms):
        raise ConfigError("algorithms must be distinct")

    seeds = [int(s) for s in raw["seeds"]]
    if not seeds or len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise ConfigError("seeds must be a nonempty list of distinct non-negative integers")
    T = int(raw["T"])
    if T < 2:
        raise ConfigError("T must be >= 2")
    batch = int(raw.get("batch_size", 1))
    if batch < 1:
        raise ConfigError("batch_size must be >= 1")

    g = raw.get("gamma0")
    gamma0 = {}
    for alg in algorithms:
        if isinstance(g, dict):
            entry = g.get("default")
            for key, value in g.items():
                if key != "default" and resolve_algorithm(key).value == alg:
                    entry = value
        else:
            entry = g
        gamma0[alg] = _gamma_list(entry, f"gamma0[{alg}]")
        if alg == Kind.VANILLA_PG.value and None in gamma0[alg]:
            raise ConfigError("VanillaPG needs an explicit gamma0")

    sweep = dict(raw.get("sweep", {}))
    if "gamma0" in sweep:
        sweep["gamma0"] = _gamma_list(sweep["gamma0"], "sweep.gamma0")
    else:
        sweep["gamma0"] = list(GAMMA0_GRID)

    output = Path(raw.get("output", f"results/{raw.get('name', 'experiment')}"))
    if not output.is_absolute():
        output = base_dir / output

    cfg = ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        env=env,
        algorithms=algorithms,
        T=T,
        seeds=seeds,
        output=output,
        policy=dict(policy) if policy is not None else None,
        gamma0=gamma0,
        batch_size=batch,
        horizon=int(raw["horizon"]) if "horizon" in raw else None,
        variant=str(raw.get("variant", "main")),
        theta0=raw.get("theta0", 0.0),
        split_batch=raw.get("split_batch"),
        schedule=dict(raw.get("schedule", {})),
        sweep=sweep,
        raw=raw,
    )
    # resolve names eagerly so that errors surface before any run starts
    try:
        env_obj = cfg.build_env()
        pol = cfg.build_policy(env_obj)
        dim = env_obj.dim if is_synth else pol.dim
        cfg.initial_theta(dim)
        for alg in algorithms:
            for g0 in cfg.gamma0[alg]:
                cfg.schedule_for(alg, g0, env_obj, pol)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomli.load(fh)
    return parse_config(raw, path.parent)


def worker_count(default: int = 1) -> int:
    """Worker processes for run fan-out, from the NORMPG_WORKERS variable."""
    value = os.environ.get("NORMPG_WORKERS")
    if not value:
        return default
    n = int(value)
    if n < 1:
        raise ConfigError("NORMPG_WORKERS must be >= 1")
    return n
