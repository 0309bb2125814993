"""Synthetic maximization problems with known gradient-domination constants.

They replace trajectory sampling by direct noisy gradient / Hessian-vector
oracles so that convergence-rate exponents can be measured without the
confounds of an MDP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .optimizers import GradSample


@dataclass(frozen=True)
class SynthProblem:
    """``J(theta) = J* - f(|theta|)`` for one of two profiles.

    ``quadratic``: ``f = (mu/2) |theta|^2``, for which
    ``|grad J| = sqrt(2 mu (J* - J))`` holds with equality.

    ``smoothed-norm``: ``f = c (1 - exp(-mu |theta|^2 / (2c)))`` with
    ``c = eps_floor / sqrt(2 mu)``.  It is quadratic near the optimum and
    flat far away, and satisfies
    ``eps_floor + |grad J| >= sqrt(2 mu) (J* - J)`` everywhere.

    Gradient samples add N(0, sigma^2 I) noise; Hessian-vector samples add
    N(0, sigma_h^2 |u|^2 I) noise.
    """

    kind: str = "quadratic"
    mu: float = 1.0
    dim: int = 10
    sigma: float = 1.0
    sigma_h: float = 0.0
    eps_floor: float = 0.0
    J_star: float = 0.0

    def __post_init__(self):
        if self.kind not in ("quadratic", "smoothed-norm"):
            raise ValueError(f"unknown synthetic problem {self.kind!r}")
        if self.mu <= 0 or self.dim < 1 or self.sigma < 0 or self.sigma_h < 0:
            raise ValueError("need mu > 0, dim >= 1 and non-negative noise levels")
        if self.kind == "smoothed-norm" and self.eps_floor <= 0:
            raise ValueError("smoothed-norm needs eps_floor > 0")

    @property
    def _c(self) -> float:
        return self.eps_floor / math.sqrt(2.0 * self.mu)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected parameter of shape ({self.dim},)")
        return theta

    def value(self, theta) -> float:
        theta = self._check(theta)
        sq = float(theta @ theta)
        if self.kind == "quadratic":
            return self.J_star - 0.5 * self.mu * sq
        c = self._c
        return self.J_star - c * -math.expm1(-self.mu * sq / (2.0 * c))

    def suboptimality(self, theta) -> float:
        return self.J_star - self.value(theta)

    def grad(self, theta) -> np.ndarray:
        theta = self._check(theta)
        if self.kind == "quadratic":
            return -self.mu * theta
        return -self.mu * theta * math.exp(-self.mu * float(theta @ theta) / (2.0 * self._c))

    def hessian_vec(self, theta, u) -> np.ndarray:
        theta = self._check(theta)
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "quadratic":
            return -self.mu * u
        c = self._c
        w = math.exp(-self.mu * float(theta @ theta) / (2.0 * c))
        return -self.mu * w * (u - (self.mu / c) * theta * float(theta @ u))

    def grad_sample(self, theta, rng: np.random.Generator) -> np.ndarray:
        g = self.grad(theta)
        if self.sigma == 0:
            return g
        return g + self.sigma * rng.standard_normal(self.dim)

    def hvp_sample(self, theta, u, rng: np.random.Generator) -> np.ndarray:
        hv = self.hessian_vec(theta, u)
        if self.sigma_h == 0:
            return hv
        return hv + self.sigma_h * float(np.linalg.norm(u)) * rng.standard_normal(self.dim)

    # oracle protocol used by the optimizers; one call counts as one probe

    def sample_grad(self, theta, n: int, rng: np.random.Generator) -> GradSample:
        g = self.grad(theta)
        if self.sigma > 0:
            g = g + self.sigma * rng.standard_normal((n, self.dim)).mean(axis=0)
        J = self.value(theta)
        return GradSample(g, n, n, J, J)

    def sample_hvp(self, theta, u, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, int, int]:
        hv = self.hessian_vec(theta, u)
        if self.sigma_h > 0:
            noise = rng.standard_normal((n, self.dim)).mean(axis=0)
            hv = hv + self.sigma_h * float(np.linalg.norm(u)) * noise
        return hv, n, n


def fit_rate(records: Sequence[np.ndarray], window: Tuple[int, int]) -> float:
    """Median over seeds of the least-squares slope of log(delta_t) on log(t).

    ``records[i][t]`` is the suboptimality after iteration ``t`` of seed ``i``;
    ``window = (lo, hi)`` selects ``lo <= t < hi``.
    """
    lo, hi = window
    if lo < 1 or hi <= lo + 1:
        raise ValueError("window must satisfy 1 <= lo < hi - 1")
    slopes = []
    for delta in records:
        delta = np.asarray(delta, dtype=np.float64)[lo:hi]
        if delta.size < 2:
            raise ValueError("window exceeds the record length")
        if np.any(~(delta > 0)):
            raise ValueError("suboptimality must be positive over the window")
        t = np.arange(lo, lo + delta.size, dtype=np.float64)
        slope, _ = np.polyfit(np.log(t), np.log(delta), 1)
        slopes.append(slope)
    return float(np.median(slopes))
