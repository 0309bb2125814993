"""Policy-gradient optimization loops behind one stepper interface.

A *gradient oracle* is anything with

``sample_grad(theta, n, rng) -> GradSample`` and
``sample_hvp(theta, u, n, rng) -> (mean_hvp, n_samples, probes)``.

:class:`PolicyGradientOracle` builds one from an environment and a policy by
sampling trajectories; :class:`normpg.synth.SynthProblem` is a direct oracle
whose calls count as one probe each.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .core import Kind, NORMALIZED_KINDS, RngHandle, ScheduleSpec, as_param, horizon, momentum, step_size
from .estimators import grad_estimate, hvp_estimate, sample_batch


class GradSample(NamedTuple):
    grad: np.ndarray  # batch-mean gradient estimate
    n_samples: int  # trajectories (or oracle calls)
    probes: int  # state transitions consumed
    mean_return: float  # undiscounted return averaged over the batch
    discounted_return: float


class PolicyGradientOracle:
    """Trajectory-sampling oracle for ``pi_theta`` acting in ``env`` for ``H`` steps."""

    def __init__(self, env, policy, H: int, discount: Optional[float] = None):
        if H < 1:
            raise ValueError("H must be >= 1")
        self.env = env
        self.policy = policy
        self.H = int(H)
        self.discount = env.discount if discount is None else float(discount)
        self.dim = policy.dim
        self._weights = self.discount ** np.arange(self.H)

    def sample_grad(self, theta, n: int, rng: np.random.Generator) -> GradSample:
        batch = sample_batch(self.env, self.policy, theta, self.H, n, rng)
        g = grad_estimate(batch, self.policy, theta, self.discount).mean(axis=0)
        rewards = batch.rewards
        return GradSample(
            g,
            n,
            n * self.H,
            float(rewards.sum(axis=1).mean()),
            float((rewards @ self._weights).mean()),
        )

    def sample_hvp(self, theta, u, n: int, rng: np.random.Generator):
        batch = sample_batch(self.env, self.policy, theta, self.H, n, rng)
        hv = hvp_estimate(batch, self.policy, theta, self.discount, u).mean(axis=0)
        return hv, n, n * self.H


# ---------------------------------------------------------------------------
# state and steppers

class OptimizerState:
    """Iterate, previous iterate, momentum direction and iteration counter.

    ``direction`` holds d_{t-1} on entry to a step and d_t on exit.
    """

    __slots__ = ("theta", "theta_prev", "direction", "t", "schedule", "batch_size")

    def __init__(self, theta, theta_prev, direction, t: int, schedule: ScheduleSpec, batch_size: int = 1):
        theta = np.asarray(theta, dtype=np.float64)
        if np.shape(theta_prev) != theta.shape or np.shape(direction) != theta.shape:
            raise ValueError("theta, theta_prev and direction must share one dimension")
        if not 0 <= t <= schedule.T:
            raise ValueError(f"iteration {t} outside [0, {schedule.T}]")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.theta = theta
        self.theta_prev = np.asarray(theta_prev, dtype=np.float64)
        self.direction = np.asarray(direction, dtype=np.float64)
        self.t = t
        self.schedule = schedule
        self.batch_size = batch_size

    @classmethod
    def initial(cls, theta0, schedule: ScheduleSpec, batch_size: int = 1) -> "OptimizerState":
        """theta_1 = theta_0 and d = 0; the first step (eta_0 = 1) fills d with a fresh gradient."""
        theta0 = as_param(theta0)
        return cls(theta0, theta0.copy(), np.zeros_like(theta0), 0, schedule, batch_size)

    def _next(self, theta_next, direction) -> "OptimizerState":
        return OptimizerState(theta_next, self.theta, direction, self.t + 1, self.schedule, self.batch_size)


class StepInfo(NamedTuple):
    sample: GradSample  # the fresh gradient sample of this iteration
    step_size: float
    eta: float
    trajectories: int
    probes: int
    lookahead: Optional[np.ndarray] = None
    q: Optional[float] = None


def _norm(x: np.ndarray) -> float:
    return math.sqrt(float(x @ x))


def _move(theta, direction, gamma: float, normalized: bool) -> np.ndarray:
    if not normalized:
        return theta + gamma * direction
    n = _norm(direction)
    if n == 0.0:
        return theta.copy()
    return theta + (gamma / n) * direction


def _batch_mean(grads) -> np.ndarray:
    grads = np.asarray(grads, dtype=np.float64)
    if grads.size == 0:
        raise ValueError("gradient batch is empty")
    return grads.mean(axis=0) if grads.ndim == 2 else grads


def step_vanilla(state: OptimizerState, grads) -> OptimizerState:
    """``theta + gamma_t * mean(grads)``; ``grads`` is ``(n, d)`` or an already averaged ``(d,)``."""
    g = _batch_mean(grads)
    gamma = step_size(state.schedule, state.t)
    return state._next(state.theta + gamma * g, g)


def step_nmpg(state: OptimizerState, grads) -> OptimizerState:
    """Momentum average of the fresh batch with d_{t-1}, then a normalized step."""
    g = _batch_mean(grads)
    eta = momentum(state.schedule, state.t)
    gamma = step_size(state.schedule, state.t)
    d = (1.0 - eta) * state.direction + eta * g
    return state._next(_move(state.theta, d, gamma, True), d)


def lookahead_point(theta, theta_prev, eta: float) -> np.ndarray:
    """Extrapolated point ``theta + (1 - eta)/eta (theta - theta_prev)``."""
    if not eta > 0.0:
        raise ValueError("eta must be positive for the lookahead point")
    theta = np.asarray(theta, dtype=np.float64)
    return theta + ((1.0 - eta) / eta) * (theta - np.asarray(theta_prev, dtype=np.float64))


def step_npgigt(state: OptimizerState, oracle, rng: np.random.Generator):
    """Sample at the lookahead point, update momentum, take a normalized step."""
    eta = momentum(state.schedule, state.t)
    gamma = step_size(state.schedule, state.t)
    point = lookahead_point(state.theta, state.theta_prev, eta)
    sample = oracle.sample_grad(point, state.batch_size, rng)
    d = (1.0 - eta) * state.direction + eta * sample.grad
    info = StepInfo(sample, gamma, eta, sample.n_samples, sample.probes, lookahead=point)
    return state._next(_move(state.theta, d, gamma, True), d), info


def harpg_split(batch_size: int, split: Optional[bool] = None):
    """(gradient, correction) trajectory counts for one HARPG iteration.

    By default a batch of more than one trajectory is split in halves
    (the gradient half gets the extra one when the size is odd); a batch of
    one, or ``split=False``, draws ``batch_size`` for each estimator.
    """
    if split is None:
        split = batch_size > 1
    if split:
        if batch_size < 2:
            raise ValueError("splitting needs batch_size >= 2")
        n_v = batch_size // 2
        return batch_size - n_v, n_v
    return batch_size, batch_size


def step_harpg(state: OptimizerState, oracle, rng: np.random.Generator, normalized: bool,
               split: Optional[bool] = None):
    """Hessian-aided recursive momentum step (normalized or not).

    The correction is a Hessian-vector product along ``theta_t - theta_{t-1}``
    sampled at a uniformly drawn point of that segment; the fresh gradient at
    ``theta_t`` uses independent trajectories.
    """
    eta = momentum(state.schedule, state.t)
    gamma = step_size(state.schedule, state.t)
    n_g, n_v = harpg_split(state.batch_size, split)
    sample = oracle.sample_grad(state.theta, n_g, rng)
    q = float(rng.random())
    point = q * state.theta + (1.0 - q) * state.theta_prev
    v, nv_used, v_probes = oracle.sample_hvp(point, state.theta - state.theta_prev, n_v, rng)
    d = (1.0 - eta) * (state.direction + v) + eta * sample.grad
    info = StepInfo(sample, gamma, eta, sample.n_samples + nv_used, sample.probes + v_probes, q=q)
    return state._next(_move(state.theta, d, gamma, normalized), d), info


# ---------------------------------------------------------------------------
# runs

ALIASES = {
    "vanillapg": Kind.VANILLA_PG, "vanilla-pg": Kind.VANILLA_PG, "vanilla": Kind.VANILLA_PG,
    "nmpg": Kind.NMPG, "n-mpg": Kind.NMPG,
    "npgigt": Kind.NPGIGT, "n-pg-igt": Kind.NPGIGT,
    "npgigt_fosp": Kind.NPGIGT_FOSP, "n-pg-igt-fosp": Kind.NPGIGT_FOSP,
    "harpg": Kind.HARPG,
    "nharpg": Kind.NHARPG, "n-harpg": Kind.NHARPG,
}


def resolve_algorithm(name) -> Kind:
    if isinstance(name, Kind):
        return name
    try:
        return ALIASES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}") from None


def trajectories_per_iteration(kind, batch_size: int, split: Optional[bool] = None) -> int:
    kind = resolve_algorithm(kind)
    if kind in (Kind.HARPG, Kind.NHARPG):
        return sum(harpg_split(batch_size, split))
    return batch_size


RECORD_COLUMNS = (
    "t", "system_probes", "trajectories", "mean_return", "discounted_return_est",
    "step_len", "dir_norm", "grad_norm_est", "step_size", "eta", "q",
    "lookahead_residual", "wall_time",
)


@dataclass
class RunRecord:
    """Per-iteration telemetry of one seeded run, stored column-wise.

    ``system_probes`` and ``trajectories`` are cumulative.  ``q`` is the
    segment position drawn by (N-)HARPG and ``lookahead_residual`` the
    relative error of ``eta * lookahead + (1 - eta) theta_prev = theta`` for
    N-PG-IGT; both are NaN for the other algorithms.  ``status`` is ``"ok"``
    or describes why the run stopped early, in which case the columns hold the
    completed iterations only.
    """

    algorithm: str
    seed: int
    columns: Dict[str, np.ndarray]
    status: str = "ok"
    theta_final: Optional[np.ndarray] = None
    thetas: Optional[np.ndarray] = None  # (T + 1, d) when recorded
    directions: Optional[np.ndarray] = None  # (T, d) when recorded
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_single(algorithm, oracle, schedule: ScheduleSpec, theta0, seed: int, batch_size: int = 1,
               split: Optional[bool] = None, record_theta: bool = False,
               stream: Sequence[int] = ()) -> RunRecord:
    """Run ``schedule.T`` iterations of one algorithm from ``theta0``.

    All randomness comes from one Philox stream addressed by
    ``(seed, stream)``.  When the oracle exposes an exact ``value(theta)``
    (synthetic problems), both return columns hold ``J(theta_t)``.
    """
    kind = resolve_algorithm(algorithm)
    if Kind(schedule.kind) is not kind:
        schedule = schedule.with_(kind=kind)
    if schedule.T < 2:
        raise ValueError("T must be >= 2")
    rng = RngHandle(int(seed), tuple(stream)).generator()
    state = OptimizerState.initial(theta0, schedule, batch_size)
    T, dim = schedule.T, state.theta.size
    cols = {name: np.full(T, np.nan) for name in RECORD_COLUMNS}
    cols["t"] = np.arange(T, dtype=np.int64)
    cols["system_probes"] = np.zeros(T, dtype=np.int64)
    cols["trajectories"] = np.zeros(T, dtype=np.int64)
    thetas = np.empty((T + 1, dim)) if record_theta else None
    dirs = np.empty((T, dim)) if record_theta else None
    if record_theta:
        thetas[0] = state.theta
    exact_value = getattr(oracle, "value", None)
    normalized = kind in NORMALIZED_KINDS
    probes = trajectories = 0
    start = time.perf_counter()
    status, done = "ok", T

    # a diverging run is detected below and reported through ``status``
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            prev = state
            info = None
            if kind in (Kind.VANILLA_PG, Kind.NMPG):
                sample = oracle.sample_grad(state.theta, batch_size, rng)
                state = step_vanilla(state, sample.grad) if kind is Kind.VANILLA_PG else step_nmpg(state, sample.grad)
                n_traj, n_probes = sample.n_samples, sample.probes
            elif kind in (Kind.NPGIGT, Kind.NPGIGT_FOSP):
                state, info = step_npgigt(state, oracle, rng)
            else:
                state, info = step_harpg(state, oracle, rng, kind is Kind.NHARPG, split)
            if info is not None:
                sample, n_traj, n_probes = info.sample, info.trajectories, info.probes
            probes += n_probes
            trajectories += n_traj
            cols["system_probes"][t] = probes
            cols["trajectories"][t] = trajectories
            if exact_value is not None:
                J = exact_value(prev.theta)
                cols["mean_return"][t] = cols["discounted_return_est"][t] = J
            else:
                cols["mean_return"][t] = sample.mean_return
                cols["discounted_return_est"][t] = sample.discounted_return
            cols["step_len"][t] = _norm(state.theta - prev.theta)
            cols["dir_norm"][t] = _norm(state.direction)
            cols["grad_norm_est"][t] = _norm(sample.grad)
            cols["step_size"][t] = step_size(schedule, t)
            cols["eta"][t] = momentum(schedule, t)
            if info is not None and info.q is not None:
                cols["q"][t] = info.q
            if info is not None and info.lookahead is not None:
                eta = info.eta
                resid = _norm(eta * info.lookahead + (1.0 - eta) * prev.theta_prev - prev.theta)
                scale = _norm(prev.theta)
                cols["lookahead_residual"][t] = resid / scale if scale > 0 else resid
            cols["wall_time"][t] = time.perf_counter() - start
            if record_theta:
                thetas[t + 1] = state.theta
                dirs[t] = state.direction
            if not np.all(np.isfinite(state.theta)):
                status, done = f"non-finite parameter at iteration {t}", t + 1
                break

    if done < T:
        cols = {k: v[:done] for k, v in cols.items()}
        if record_theta:
            thetas, dirs = thetas[: done + 1], dirs[:done]
    return RunRecord(kind.value, int(seed), cols, status, state.theta.copy(), thetas, dirs,
                     {"batch_size": batch_size, "T": T})


def make_oracle(env, policy, schedule: ScheduleSpec, horizon_override: Optional[int] = None):
    H = horizon_override if horizon_override is not None else horizon(schedule)
    return PolicyGradientOracle(env, policy, H)


def run(algorithm, source, schedule: ScheduleSpec, theta0, batch_size: int = 1, seeds=(0,),
        policy=None, split: Optional[bool] = None, record_theta: bool = False) -> List[RunRecord]:
    """Run one algorithm for every seed.

    ``source`` is a gradient oracle, or an environment when ``policy`` is
    given; the trajectory length then comes from :func:`normpg.core.horizon`.
    """
    oracle = source if policy is None else make_oracle(source, policy, schedule)
    return [
        run_single(algorithm, oracle, schedule, theta0, s, batch_size, split, record_theta)
        for s in seeds
    ]
