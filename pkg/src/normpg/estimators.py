"""Trajectory sampling and the stochastic gradient / Hessian-vector estimators.

Every estimator accepts either a single :class:`Trajectory` (returns a vector
of shape ``(d,)``) or a :class:`TrajectoryBatch` (returns ``(n, d)``).  Costs
are O(H d) per trajectory: the Hessian-vector product never forms a matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray  # (H, ...) with H >= 1
    actions: np.ndarray  # (H, ...)
    rewards: np.ndarray  # (H,)

    def __post_init__(self):
        H = len(self.rewards)
        if H < 1 or len(self.states) != H or len(self.actions) != H:
            raise ValueError("states, actions and rewards must share one length H >= 1")

    @property
    def H(self) -> int:
        return len(self.rewards)


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    states: np.ndarray  # (n, H, ...)
    actions: np.ndarray  # (n, H, ...)
    rewards: np.ndarray  # (n, H)

    @property
    def H(self) -> int:
        return self.rewards.shape[1]

    def __len__(self) -> int:
        return self.rewards.shape[0]

    def __getitem__(self, i) -> Trajectory:
        return Trajectory(self.states[i], self.actions[i], self.rewards[i])

    @classmethod
    def stack(cls, trajectories) -> "TrajectoryBatch":
        trajectories = list(trajectories)
        return cls(
            np.stack([t.states for t in trajectories]),
            np.stack([t.actions for t in trajectories]),
            np.stack([t.rewards for t in trajectories]),
        )


Traj = Union[Trajectory, TrajectoryBatch]


def _batched(tau: Traj):
    if isinstance(tau, TrajectoryBatch):
        return tau.states, tau.actions, tau.rewards, False
    return tau.states[None], tau.actions[None], np.asarray(tau.rewards)[None], True


# ---------------------------------------------------------------------------
# sampling

def sample_batch(env, policy, theta, H: int, n: int, rng: np.random.Generator) -> TrajectoryBatch:
    """Simulate ``n`` independent length-``H`` trajectories under ``pi_theta``."""
    if H < 1 or n < 1:
        raise ValueError("H and n must be >= 1")
    s = env.reset_batch(n, rng)
    states, actions, rewards = [], [], []
    for _ in range(H):
        a = policy.sample_action(theta, s, rng)
        nxt, r = env.step_batch(s, a, rng)
        states.append(s)
        actions.append(a)
        rewards.append(r)
        s = nxt
    return TrajectoryBatch(np.stack(states, axis=1), np.stack(actions, axis=1), np.stack(rewards, axis=1))


def sample_trajectory(env, policy, theta, H: int, rng: np.random.Generator) -> Trajectory:
    return sample_batch(env, policy, theta, H, 1, rng)[0]


# ---------------------------------------------------------------------------
# estimators

def reward_to_go(rewards: np.ndarray, discount: float) -> np.ndarray:
    """``sum_{h >= t} discount^h r_h`` along the last axis."""
    H = rewards.shape[-1]
    weighted = rewards * discount ** np.arange(H)
    return np.flip(np.cumsum(np.flip(weighted, -1), -1), -1)


def grad_estimate(tau: Traj, policy, theta, discount: float) -> np.ndarray:
    """REINFORCE estimator with reward-to-go weights (no baseline)."""
    S, A, R, single = _batched(tau)
    scores = policy.score(theta, S, A)  # (n, H, d)
    g = np.einsum("nh,nhd->nd", reward_to_go(R, discount), scores)
    return g[0] if single else g


def traj_log_density_grad(tau: Traj, policy, theta) -> np.ndarray:
    """Gradient of log p(tau | pi_theta): the dynamics do not depend on theta."""
    S, A, _, single = _batched(tau)
    out = policy.score(theta, S, A).sum(axis=1)
    return out[0] if single else out


def hvp_estimate(tau: Traj, policy, theta, discount: float, u) -> np.ndarray:
    """Stochastic Hessian-vector product B(tau, theta) u.

    ``<grad log p(tau), u> g(tau, theta) + sum_t R_t hess(log pi_t) u`` where
    the second term is the exact derivative of ``<g(tau, theta), u>``.
    """
    u = np.asarray(u, dtype=np.float64)
    S, A, R, single = _batched(tau)
    if u.shape[-1] != np.asarray(theta).shape[0]:
        raise ValueError("u and theta must have the same dimension")
    scores = policy.score(theta, S, A)
    rtg = reward_to_go(R, discount)
    g = np.einsum("nh,nhd->nd", rtg, scores)
    U = np.broadcast_to(u, g.shape)
    logp_dot_u = np.einsum("nhd,nd->n", scores, U)
    curv = policy.score_hessian_vec(theta, S, A, U[:, None, :])
    out = logp_dot_u[:, None] * g + np.einsum("nh,nhd->nd", rtg, curv)
    return out[0] if single else out


def segment_point(theta_t, theta_prev, q: float) -> np.ndarray:
    return q * np.asarray(theta_t) + (1.0 - q) * np.asarray(theta_prev)


def harpg_correction(policy, env, theta_t, theta_prev, discount: float, H: int,
                     rng: np.random.Generator, q: Optional[float] = None, n: int = 1) -> np.ndarray:
    """Unbiased estimate of grad J_H(theta_t) - grad J_H(theta_prev).

    Draws ``q ~ U[0, 1]`` (or uses the given ``q``), samples trajectories at
    ``q theta_t + (1 - q) theta_prev`` and returns the mean Hessian-vector
    product along ``theta_t - theta_prev``.
    """
    theta_t = np.asarray(theta_t, dtype=np.float64)
    theta_prev = np.asarray(theta_prev, dtype=np.float64)
    if theta_t.shape != theta_prev.shape:
        raise ValueError("theta_t and theta_prev must share one dimension")
    if q is None:
        q = rng.random()
    point = segment_point(theta_t, theta_prev, q)
    batch = sample_batch(env, policy, point, H, n, rng)
    return hvp_estimate(batch, policy, point, discount, theta_t - theta_prev).mean(axis=0)


class FisherEstimate(NamedTuple):
    matrix: np.ndarray
    min_eig: float
    n_samples: int


def fisher_estimate(policy, env, theta, discount: float, n_samples: int,
                    rng: np.random.Generator, horizon: Optional[int] = None) -> FisherEstimate:
    """Monte Carlo Fisher matrix under the discounted state-visitation measure.

    The visitation time is drawn from Geometric(1 - discount) on {0, 1, ...};
    draws at or beyond ``horizon`` are redrawn, a bias of order
    ``discount**horizon``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if horizon is None:
        horizon = max(1, math.ceil(math.log(1e-8) / math.log(discount)))
    times = rng.geometric(1.0 - discount, size=n_samples) - 1
    bad = times >= horizon
    while bad.any():
        times[bad] = rng.geometric(1.0 - discount, size=int(bad.sum())) - 1
        bad = times >= horizon
    t_max = int(times.max())
    s = env.reset_batch(n_samples, rng)
    picked = s.copy()
    for t in range(t_max + 1):
        here = times == t
        picked[here] = s[here]
        if t == t_max:
            break
        a = policy.sample_action(theta, s, rng)
        s, _ = env.step_batch(s, a, rng)
    actions = policy.sample_action(theta, picked, rng)
    scores = policy.score(theta, picked, actions)
    F = scores.T @ scores / n_samples
    F = 0.5 * (F + F.T)
    return FisherEstimate(F, float(np.linalg.eigvalsh(F)[0]), n_samples)


# ---------------------------------------------------------------------------
# problem constants

class EstimatorConstants(NamedTuple):
    L_g: float
    sigma_g: float
    sigma_h: float
    L_h: float
    D_g: float
    D_h: float


def estimator_constants(M_g: float, M_h: float, l_2: float, r_max: float,
                        discount: float, H: int) -> EstimatorConstants:
    """Smoothness, variance and truncation constants from the policy bounds."""
    if min(M_g, r_max) <= 0 or M_h < 0 or l_2 < 0 or H < 1:
        raise ValueError("constants need M_g, r_max > 0, M_h, l_2 >= 0 and H >= 1")
    if not 0.0 < discount < 1.0:
        raise ValueError("discount must lie in (0, 1)")
    g, c = discount, 1.0 - discount
    L_g = r_max * (M_g**2 + M_h) / c**2
    sigma_g = math.sqrt(r_max**2 * M_g**2 / c**3)
    sigma_h = math.sqrt(r_max**2 * (H**2 * M_g**4 + M_h**2) / c**4)
    inner = max(
        M_h,
        g * M_g**2 / c,
        l_2 / M_g,
        M_h * g / c,
        (M_g * (1 + g) + M_h * g * c) / (1 - g**2),
    )
    L_h = r_max * M_g * M_h / c**2 + r_max * M_g**3 * (1 + g) / c**3 + r_max * M_g / c * inner
    D_g = M_g * r_max / c * math.sqrt(1.0 / c + H)
    D_h = r_max * (M_h + M_g**2) / c * (H + 1.0 / c)
    return EstimatorConstants(L_g, sigma_g, sigma_h, L_h, D_g, D_h)
