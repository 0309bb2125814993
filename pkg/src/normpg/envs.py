"""MDP environments.

Two families share one interface: :class:`FiniteMdp` (enumerable, used by the
exact oracles) and :class:`PointMassEnv` (continuous linear dynamics).  Both
simulate a whole batch of independent trajectories at once through
``reset_batch`` / ``step_batch``; ``reset`` / ``step`` are the one-trajectory
conveniences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    transition: np.ndarray  # P[s, a, s']
    reward: np.ndarray  # r[s, a]
    init_dist: np.ndarray
    discount: float
    r_max: Optional[float] = None
    name: str = "finite"

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        r = np.asarray(self.reward, dtype=np.float64)
        rho = np.asarray(self.init_dist, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError("transition must have shape (S, A, S)")
        S, A, _ = P.shape
        if r.shape != (S, A):
            raise ValueError(f"reward must have shape {(S, A)}")
        if rho.shape != (S,):
            raise ValueError(f"init_dist must have shape {(S,)}")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > _TOL):
            raise ValueError("each P[s, a, :] must be a probability vector")
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > _TOL:
            raise ValueError("init_dist must be a probability vector")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        r_max = self.r_max
        if r_max is None:
            r_max = max(float(np.abs(r).max()), 1e-300)
        if r_max <= 0 or np.any(np.abs(r) > r_max):
            raise ValueError("rewards must be bounded by r_max > 0")
        for name, value in (("transition", P), ("reward", r), ("init_dist", rho)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "r_max", float(r_max))
        object.__setattr__(self, "_cum_p", np.cumsum(P, axis=2))
        object.__setattr__(self, "_cum_rho", np.cumsum(rho))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def _check(self, states, actions=None):
        states = np.asarray(states)
        if np.any(states < 0) or np.any(states >= self.n_states):
            raise ValueError("state index out of range")
        if actions is not None:
            actions = np.asarray(actions)
            if np.any(actions < 0) or np.any(actions >= self.n_actions):
                raise ValueError("action index out of range")

    def reset_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        idx = np.searchsorted(self._cum_rho, u, side="right")
        return np.minimum(idx, self.n_states - 1)

    def step_batch(self, states, actions, rng: np.random.Generator):
        states = np.asarray(states, dtype=np.int64)
        actions = np.asarray(actions, dtype=np.int64)
        self._check(states, actions)
        cum = self._cum_p[states, actions]
        u = rng.random(states.shape)
        nxt = (cum <= u[..., None]).sum(axis=-1)
        nxt = np.minimum(nxt, self.n_states - 1)
        return nxt, self.reward[states, actions]

    def reset(self, rng: np.random.Generator) -> int:
        return int(self.reset_batch(1, rng)[0])

    def step(self, state, action, rng: np.random.Generator):
        nxt, r = self.step_batch(np.array([state]), np.array([action]), rng)
        return int(nxt[0]), float(r[0])

    def with_reward(self, reward) -> "FiniteMdp":
        return FiniteMdp(self.transition, reward, self.init_dist, self.discount, None, self.name)


@dataclass(frozen=True, eq=False)
class PointMassEnv:
    """Linear dynamics ``s' = A s + B clip(a) + noise`` with a clipped quadratic cost.

    The reward is ``clip(-|s - goal|^2 - c |a|^2, -r_max, r_max)`` where ``a``
    is the clipped action.
    """

    A: np.ndarray
    B: np.ndarray
    goal: np.ndarray
    start: np.ndarray
    a_max: float = 1.0
    r_max: float = 10.0
    action_cost: float = 0.01
    noise_scale: float = 0.0
    init_noise: float = 0.0
    discount: float = 0.99
    name: str = "point-mass"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        p = A.shape[0]
        if A.shape != (p, p) or B.shape[0] != p:
            raise ValueError("A must be (p, p) and B must be (p, q)")
        goal = np.asarray(self.goal, dtype=np.float64).reshape(p)
        start = np.asarray(self.start, dtype=np.float64).reshape(p)
        if self.a_max <= 0 or self.r_max <= 0:
            raise ValueError("a_max and r_max must be positive")
        if self.noise_scale < 0 or self.init_noise < 0:
            raise ValueError("noise scales must be non-negative")
        for name, value in (("A", A), ("B", B), ("goal", goal), ("start", start)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def action_dim(self) -> int:
        return self.B.shape[1]

    def reset_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        states = np.broadcast_to(self.start, (n, self.state_dim)).copy()
        if self.init_noise > 0:
            states += self.init_noise * rng.standard_normal(states.shape)
        return states

    def reward_of(self, states, actions) -> np.ndarray:
        a = np.clip(actions, -self.a_max, self.a_max)
        cost = np.sum((states - self.goal) ** 2, axis=-1) + self.action_cost * np.sum(a**2, axis=-1)
        return np.clip(-cost, -self.r_max, self.r_max)

    def step_batch(self, states, actions, rng: np.random.Generator):
        states = np.asarray(states, dtype=np.float64)
        a = np.clip(np.asarray(actions, dtype=np.float64), -self.a_max, self.a_max)
        reward = self.reward_of(states, a)
        nxt = states @ self.A.T + a @ self.B.T
        if self.noise_scale > 0:
            nxt = nxt + self.noise_scale * rng.standard_normal(nxt.shape)
        return nxt, reward

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return self.reset_batch(1, rng)[0]

    def step(self, state, action, rng: np.random.Generator):
        nxt, r = self.step_batch(np.asarray(state)[None], np.asarray(action)[None], rng)
        return nxt[0], float(r[0])


# ---------------------------------------------------------------------------
# bundled environments

def two_state_mdp(discount: float = 0.9) -> FiniteMdp:
    """Two states, two actions; action 1 from state 0 moves to state 1 surely."""
    P = np.array(
        [
            [[0.3, 0.7], [0.0, 1.0]],
            [[0.6, 0.4], [0.1, 0.9]],
        ]
    )
    r = np.array([[0.5, 0.0], [-0.2, 1.0]])
    rho = np.array([0.8, 0.2])
    return FiniteMdp(P, r, rho, discount, r_max=1.0, name="two-state")


def random_walk_mdp(n_states: int = 5, slip: float = 0.2, discount: float = 0.9) -> FiniteMdp:
    """Chain walk: action 0 moves left, action 1 right, slipping with prob ``slip``.

    Walls reflect into the boundary state.  The right end pays 1, the left end
    pays a small distractor reward 0.2; the walk starts in the middle.
    """
    S = n_states
    P = np.zeros((S, 2, S))
    for s in range(S):
        left, right = max(s - 1, 0), min(s + 1, S - 1)
        P[s, 0, left] += 1.0 - slip
        P[s, 0, right] += slip
        P[s, 1, right] += 1.0 - slip
        P[s, 1, left] += slip
    r = np.zeros((S, 2))
    r[S - 1, :] = 1.0
    r[0, :] = 0.2
    rho = np.zeros(S)
    rho[S // 2] = 1.0
    return FiniteMdp(P, r, rho, discount, r_max=1.0, name="random-walk")


def single_state_mdp(reward=(1.0, 0.0), discount: float = 0.5) -> FiniteMdp:
    r = np.asarray(reward, dtype=np.float64).reshape(1, -1)
    A = r.shape[1]
    P = np.ones((1, A, 1))
    return FiniteMdp(P, r, np.ones(1), discount, name="single-state")


def point_mass(
    dim: int = 2,
    dt: float = 0.1,
    goal=None,
    a_max: float = 1.0,
    r_max: float = 10.0,
    noise_scale: float = 0.01,
    init_noise: float = 0.05,
    discount: float = 0.99,
) -> PointMassEnv:
    """A ``dim``-dimensional point mass driven toward ``goal`` (default all ones)."""
    goal = np.ones(dim) if goal is None else np.asarray(goal, dtype=np.float64)
    return PointMassEnv(
        A=np.eye(dim),
        B=dt * np.eye(dim),
        goal=goal,
        start=np.zeros(dim),
        a_max=a_max,
        r_max=r_max,
        noise_scale=noise_scale,
        init_noise=init_noise,
        discount=discount,
    )


BUNDLED_MDPS = {
    "two-state": two_state_mdp,
    "random-walk": random_walk_mdp,
}


def make_env(spec: dict):
    """Build an environment from a configuration mapping.

    ``{"type": "finite", "name": "two-state", "discount": 0.9}`` selects a
    bundled MDP; ``{"type": "finite", "transition": ..., "reward": ...,
    "init_dist": ...}`` defines one explicitly; ``{"type": "point-mass", ...}``
    forwards the remaining keys to :func:`point_mass`.
    """
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "finite":
        if "name" in spec:
            name = spec.pop("name")
            if name not in BUNDLED_MDPS:
                raise ValueError(f"unknown bundled MDP {name!r}")
            return BUNDLED_MDPS[name](**spec)
        return FiniteMdp(
            np.asarray(spec["transition"], dtype=np.float64),
            np.asarray(spec["reward"], dtype=np.float64),
            np.asarray(spec["init_dist"], dtype=np.float64),
            float(spec.get("discount", 0.9)),
            spec.get("r_max"),
        )
    if kind == "point-mass":
        return point_mass(**spec)
    raise ValueError(f"unknown environment type {kind!r}")
