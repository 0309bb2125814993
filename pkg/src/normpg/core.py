"""Shared numeric helpers, reproducible random streams and step-size schedules.

Every schedule is a pure function of a frozen :class:`ScheduleSpec` and the
iteration index, so the same spec can be shared between worker processes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np


class ScheduleError(ValueError):
    pass


def as_param(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a finite float64 parameter vector."""
    theta = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    if theta.size == 0:
        raise ValueError("parameter vector must have dimension >= 1")
    if dim is not None and theta.size != dim:
        raise ValueError(f"expected parameter dimension {dim}, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector has non-finite entries")
    return theta


# ---------------------------------------------------------------------------
# random streams

@dataclass(frozen=True)
class RngHandle:
    """A (seed, stream) address for an independent Philox stream.

    ``stream`` may be extended with :meth:`child` to obtain a sub-stream, e.g.
    ``RngHandle(7).child(run_index, role)``.  Equal addresses always produce the
    same draws; distinct addresses are statistically independent because they
    map to distinct SeedSequence spawn keys.
    """

    seed: int
    stream: Tuple[int, ...] = ()

    def __post_init__(self):
        if isinstance(self.stream, int):
            object.__setattr__(self, "stream", (self.stream,))
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if any(k < 0 for k in self.stream):
            raise ValueError("stream ids must be non-negative")

    def child(self, *keys: int) -> "RngHandle":
        return RngHandle(self.seed, tuple(self.stream) + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def make_rng(rng: Union[None, int, RngHandle, np.random.Generator]) -> np.random.Generator:
    """Coerce an int seed, an RngHandle or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngHandle):
        return rng.generator()
    if rng is None:
        raise ValueError("an explicit seed or generator is required")
    return RngHandle(int(rng)).generator()


# ---------------------------------------------------------------------------
# schedules

class Kind(str, enum.Enum):
    VANILLA_PG = "VanillaPG"
    NMPG = "NMPG"
    NPGIGT = "NPGIGT"
    NPGIGT_FOSP = "NPGIGT_FOSP"
    HARPG = "HARPG"
    NHARPG = "NHARPG"


NORMALIZED_KINDS = frozenset({Kind.NMPG, Kind.NPGIGT, Kind.NPGIGT_FOSP, Kind.NHARPG})

# horizon multipliers c in H = c * log(T + shift) / (1 - discount)
_HORIZON = {
    ("main", Kind.VANILLA_PG): (1.0, 1),
    ("main", Kind.NMPG): (1.0, 1),
    ("main", Kind.NPGIGT): (1.0, 1),
    ("main", Kind.NPGIGT_FOSP): (1.0, 1),
    ("main", Kind.HARPG): (1.0, 1),
    ("main", Kind.NHARPG): (1.0, 1),
    ("detailed", Kind.VANILLA_PG): (1.0, 1),
    ("detailed", Kind.NMPG): (5.0 / 3.0, 1),
    ("detailed", Kind.NPGIGT): (9.0 / 5.0, 1),
    ("detailed", Kind.NPGIGT_FOSP): (1.0, 1),
    ("detailed", Kind.HARPG): (2.0, 4),
    ("detailed", Kind.NHARPG): (1.5, 1),
}


@dataclass(frozen=True)
class ScheduleSpec:
    """Parameters of a step-size / momentum / horizon schedule.

    ``variant`` selects between the compact schedules (``"main"``) and the
    versions with sharper constants (``"detailed"``); they differ in the HARPG momentum (2/(t+2) vs 5/(t+5)), the HARPG initial
    step size, and the horizon multipliers.

    For the normalized methods ``gamma0`` is optional: without it the step is
    ``6 M_g / (mu_F (t+2))``; with it the tuned form ``2 gamma0 / (t+2)`` is
    used.  VanillaPG always needs ``gamma0``; HARPG derives it from
    ``sigma_g``, ``L_g`` and ``D_h`` when it is not given.
    """

    kind: Kind
    T: int
    M_g: float = 1.0
    mu_F: float = 1.0
    discount: float = 0.99
    gamma0: Optional[float] = None
    variant: str = "main"
    sigma_g: Optional[float] = None
    L_g: Optional[float] = None
    D_h: Optional[float] = None
    horizon_override: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.variant not in ("main", "detailed"):
            raise ScheduleError(f"unknown schedule variant {self.variant!r}")
        if int(self.T) < 1:
            raise ScheduleError("T must be a positive integer")
        if not 0.0 < self.discount < 1.0:
            raise ScheduleError("discount must lie in (0, 1)")
        if self.M_g <= 0 or self.mu_F <= 0:
            raise ScheduleError("M_g and mu_F must be positive")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise ScheduleError("gamma0 must be positive")

    def with_(self, **changes) -> "ScheduleSpec":
        return replace(self, **changes)


def _check_t(spec: ScheduleSpec, t: int) -> None:
    if t < 0 or t >= spec.T:
        raise ScheduleError(f"iteration {t} outside [0, {spec.T})")


def momentum(spec: ScheduleSpec, t: int) -> float:
    """Momentum weight eta_t in (0, 1]; eta_0 = 1 for every kind."""
    _check_t(spec, t)
    kind = spec.kind
    if kind is Kind.VANILLA_PG:
        return 1.0
    if kind is Kind.NMPG:
        return (2.0 / (t + 2)) ** (2.0 / 3.0)
    if kind is Kind.NPGIGT:
        return (2.0 / (t + 2)) ** 0.8
    if kind is Kind.NPGIGT_FOSP:
        return (2.0 / (t + 2)) ** (4.0 / 7.0)
    if kind is Kind.HARPG and spec.variant == "detailed":
        return 5.0 / (t + 5)
    return 2.0 / (t + 2)


def harpg_gamma0(spec: ScheduleSpec) -> float:
    """Initial HARPG step size derived from the problem constants."""
    if spec.gamma0 is not None:
        return spec.gamma0
    if spec.sigma_g is None or spec.L_g is None or spec.D_h is None:
        raise ScheduleError("HARPG needs gamma0 or all of sigma_g, L_g, D_h")
    H = horizon(spec)
    g = spec.discount
    if spec.variant == "main":
        a = 1.0 / (8.0 * math.sqrt(6.0) * (spec.L_g + spec.sigma_g + spec.D_h * g**H))
        b = math.sqrt(2.0) * spec.M_g / (math.sqrt(3.0) * spec.sigma_g * spec.mu_F)
        return min(a, b)
    mu = spec.mu_F**2 / (2.0 * spec.M_g**2)
    eta0 = momentum(spec, 0)
    a = math.sqrt(eta0) / (8.0 * math.sqrt(3.0) * (spec.L_g + spec.sigma_g + spec.D_h * g ** (2 * H)))
    b = 1.0 / (spec.sigma_g * math.sqrt(3.0 * mu))
    return min(a, b)


def step_size(spec: ScheduleSpec, t: int) -> float:
    """Step size gamma_t for iteration ``t``."""
    _check_t(spec, t)
    kind = spec.kind
    if kind is Kind.VANILLA_PG:
        if spec.gamma0 is None:
            raise ScheduleError("VanillaPG requires gamma0")
        return spec.gamma0 * (2.0 / (t + 2)) ** (2.0 / 3.0)
    if kind is Kind.HARPG:
        return harpg_gamma0(spec) * math.sqrt(momentum(spec, t))
    if kind is Kind.NPGIGT_FOSP:
        scale = 1.0 if spec.gamma0 is None else spec.gamma0
        return scale * (2.0 / (t + 2)) ** (5.0 / 7.0)
    if spec.gamma0 is not None:
        return 2.0 * spec.gamma0 / (t + 2)
    return 6.0 * spec.M_g / (spec.mu_F * (t + 2))


def horizon(spec: ScheduleSpec) -> int:
    """Trajectory length, ``ceil(c log(T + k) / (1 - discount))`` clamped to >= 1."""
    if spec.horizon_override is not None:
        if spec.horizon_override < 1:
            raise ScheduleError("horizon override must be >= 1")
        return int(spec.horizon_override)
    c, shift = _HORIZON[(spec.variant, spec.kind)]
    value = c * math.log(spec.T + shift) / (1.0 - spec.discount)
    return max(1, math.ceil(value))


def schedule_arrays(spec: ScheduleSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized (gamma_t, eta_t) for t = 0..T-1."""
    steps = np.array([step_size(spec, t) for t in range(spec.T)])
    etas = np.array([momentum(spec, t) for t in range(spec.T)])
    return steps, etas
