"""Policy parameterizations with closed-form score and log-density Hessian.

All methods broadcast over leading batch axes: ``states`` may be a single state
or an array of them (shape ``(..., p)`` for continuous states, ``(...)`` of
ints for finite MDPs), and the returned scores have shape ``(..., dim)``.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


class PolicyBounds(NamedTuple):
    """Uniform bounds on the score (M_g), its Jacobian (M_h) and the Jacobian's
    Lipschitz constant (l_2).  ``M_g = inf`` marks an unbounded score."""

    M_g: float
    M_h: float
    l_2: float
    note: str = ""

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.M_g)


# ---------------------------------------------------------------------------
# feature maps

class RawFeatures:
    """The state itself, optionally with a constant 1 appended.

    ``state_bound`` is a declared bound on ``|s|``; without it the feature
    norm bound is infinite.
    """

    def __init__(self, state_dim: int, bias: bool = True, state_bound: Optional[float] = None):
        self.state_dim = state_dim
        self.bias = bias
        self.dim = state_dim + int(bias)
        if state_bound is None:
            self.norm_bound = math.inf
        else:
            self.norm_bound = math.sqrt(state_bound**2 + int(bias))

    def __call__(self, states):
        s = np.asarray(states, dtype=np.float64)
        if not self.bias:
            return s
        ones = np.ones(s.shape[:-1] + (1,))
        return np.concatenate([s, ones], axis=-1)


class TanhFeatures:
    """``tanh(W s + b)``; every coordinate lies in (-1, 1) so the norm is < sqrt(k)."""

    def __init__(self, W, b=None):
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.zeros(self.W.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
        self.dim = self.W.shape[0]
        self.state_dim = self.W.shape[1]
        self.norm_bound = math.sqrt(self.dim)

    @classmethod
    def random(cls, state_dim: int, dim: int, scale: float = 1.0, seed: int = 0):
        rng = np.random.default_rng(seed)
        return cls(scale * rng.standard_normal((dim, state_dim)), rng.uniform(-1, 1, dim))

    def __call__(self, states):
        return np.tanh(np.asarray(states, dtype=np.float64) @ self.W.T + self.b)


class FourierFeatures:
    """Random Fourier features ``sqrt(2/k) cos(W s + b)``, norm at most sqrt(2)."""

    def __init__(self, W, b):
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.dim = self.W.shape[0]
        self.state_dim = self.W.shape[1]
        self.norm_bound = math.sqrt(2.0)

    @classmethod
    def random(cls, state_dim: int, dim: int, bandwidth: float = 1.0, seed: int = 0):
        rng = np.random.default_rng(seed)
        W = rng.standard_normal((dim, state_dim)) / bandwidth
        return cls(W, rng.uniform(0.0, 2.0 * math.pi, dim))

    def __call__(self, states):
        z = np.asarray(states, dtype=np.float64) @ self.W.T + self.b
        return math.sqrt(2.0 / self.dim) * np.cos(z)


# ---------------------------------------------------------------------------
# linear-mean location families

class _LinearLocationPolicy:
    """Shared machinery for ``a_j = phi(s)^T theta_j + sigma * noise`` heads."""

    discrete = False

    def __init__(self, features, sigma: float, action_dim: int = 1):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.features = features
        self.sigma = float(sigma)
        self.action_dim = int(action_dim)
        self.dim = self.action_dim * features.dim

    def _weights(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected parameter of shape ({self.dim},), got {theta.shape}")
        return theta.reshape(self.action_dim, self.features.dim)

    def mean(self, theta, states) -> np.ndarray:
        W = self._weights(theta)
        return self.features(states) @ W.T

    def _standardized(self, theta, states, actions):
        phi = self.features(states)
        mu = phi @ self._weights(theta).T
        a = np.asarray(actions, dtype=np.float64).reshape(mu.shape)
        return phi, (a - mu) / self.sigma

    def _outer(self, coef, phi):
        # coef (..., q), phi (..., k) -> (..., q*k)
        out = coef[..., :, None] * phi[..., None, :]
        return out.reshape(out.shape[:-2] + (self.dim,))

    def _hess_vec(self, curvature, phi, u):
        # curvature (..., q) multiplies the rank-one block phi phi^T / sigma^2
        U = np.asarray(u, dtype=np.float64)
        U = U.reshape(U.shape[:-1] + (self.action_dim, self.features.dim))
        proj = np.einsum("...k,...qk->...q", phi, U)
        return self._outer(curvature * proj / self.sigma**2, phi)


class GaussianLinearPolicy(_LinearLocationPolicy):
    """Gaussian heads with linear mean and fixed standard deviation.

    ``action_clip`` clips sampled actions to ``[-a, a]``; the score is then
    evaluated at the clipped action, which is what makes the score bounded.
    ``theta_bound`` declares a bound on each head's parameter norm.
    """

    def __init__(self, features, sigma: float, action_dim: int = 1,
                 action_clip: Optional[float] = None, theta_bound: Optional[float] = None):
        super().__init__(features, sigma, action_dim)
        self.action_clip = action_clip
        self.theta_bound = theta_bound

    def sample_action(self, theta, states, rng):
        mu = self.mean(theta, states)
        a = mu + self.sigma * rng.standard_normal(mu.shape)
        if self.action_clip is not None:
            a = np.clip(a, -self.action_clip, self.action_clip)
        return a

    def log_prob(self, theta, states, actions):
        _, x = self._standardized(theta, states, actions)
        return np.sum(-0.5 * x**2 - math.log(self.sigma) - 0.5 * _LOG_2PI, axis=-1)

    def score(self, theta, states, actions):
        phi, x = self._standardized(theta, states, actions)
        return self._outer(x / self.sigma, phi)

    def score_hessian_vec(self, theta, states, actions, u):
        phi = self.features(states)
        self._weights(theta)
        return self._hess_vec(-np.ones(phi.shape[:-1] + (self.action_dim,)), phi, u)

    def fisher_at(self, states):
        """Per-state Fisher matrix, block diagonal with ``phi phi^T / sigma^2``."""
        phi = self.features(states)
        block = phi[..., :, None] * phi[..., None, :] / self.sigma**2
        return np.kron(np.eye(self.action_dim), block)

    def policy_bounds(self) -> PolicyBounds:
        D = self.features.norm_bound
        M_h = D**2 / self.sigma**2
        if self.action_clip is None or self.theta_bound is None or not math.isfinite(D):
            return PolicyBounds(math.inf, M_h, 0.0, "unbounded: declare action_clip, theta_bound and a feature bound")
        M_g = math.sqrt(self.action_dim) * (self.action_clip + D * self.theta_bound) * D / self.sigma**2
        return PolicyBounds(M_g, M_h, 0.0, "bounded only under action clipping")


class CauchyLinearPolicy(_LinearLocationPolicy):
    """Cauchy heads with linear location and scale ``sigma``; the score is bounded."""

    def sample_action(self, theta, states, rng):
        mu = self.mean(theta, states)
        u = rng.random(mu.shape)
        return mu + self.sigma * np.tan(math.pi * (u - 0.5))

    def log_prob(self, theta, states, actions):
        _, x = self._standardized(theta, states, actions)
        return np.sum(-math.log(math.pi * self.sigma) - np.log1p(x**2), axis=-1)

    def score(self, theta, states, actions):
        phi, x = self._standardized(theta, states, actions)
        return self._outer(2.0 * x / (1.0 + x**2) / self.sigma, phi)

    def score_hessian_vec(self, theta, states, actions, u):
        phi, x = self._standardized(theta, states, actions)
        curvature = -2.0 * (1.0 - x**2) / (1.0 + x**2) ** 2
        return self._hess_vec(curvature, phi, u)

    def policy_bounds(self) -> PolicyBounds:
        # |2x/(1+x^2)| <= 1, |2(1-x^2)/(1+x^2)^2| <= 2 (attained at x = 0),
        # |4x(x^2-3)/(1+x^2)^3| < 4
        D, s = self.features.norm_bound, self.sigma
        q = math.sqrt(self.action_dim)
        return PolicyBounds(q * D / s, 2.0 * D**2 / s**2, 4.0 * D**3 / s**3)


# ---------------------------------------------------------------------------
# discrete actions

class SoftmaxLinearPolicy:
    """Log-linear policy ``pi(a|s) ∝ exp(phi(s, a)^T theta)`` over a finite MDP.

    ``features`` has shape ``(S, A, k)``.
    """

    discrete = True

    def __init__(self, features):
        self.phi = np.asarray(features, dtype=np.float64)
        if self.phi.ndim != 3:
            raise ValueError("features must have shape (S, A, k)")
        self.n_states, self.n_actions, self.dim = self.phi.shape

    def _check(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected parameter of shape ({self.dim},), got {theta.shape}")
        return theta

    def all_probs(self, theta) -> np.ndarray:
        logits = self.phi @ self._check(theta)
        logits = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        return p / p.sum(axis=1, keepdims=True)

    def action_probs(self, theta, states):
        return self.all_probs(theta)[np.asarray(states)]

    def sample_action(self, theta, states, rng):
        p = self.action_probs(theta, states)
        u = rng.random(p.shape[:-1])
        a = (np.cumsum(p, axis=-1) <= u[..., None]).sum(axis=-1)
        return np.minimum(a, self.n_actions - 1)

    def log_prob(self, theta, states, actions):
        logits = self.phi @ self._check(theta)
        m = logits.max(axis=1, keepdims=True)
        logz = (m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True)))[:, 0]
        s, a = np.asarray(states), np.asarray(actions)
        return logits[s, a] - logz[s]

    def score(self, theta, states, actions):
        p = self.all_probs(theta)
        mean_phi = np.einsum("sa,sak->sk", p, self.phi)
        s, a = np.asarray(states), np.asarray(actions)
        return self.phi[s, a] - mean_phi[s]

    def score_hessian_vec(self, theta, states, actions, u):
        # -Cov_{a ~ pi(.|s)}[phi(s, a)] u, independent of the action taken
        p = self.all_probs(theta)
        s = np.asarray(states)
        u = np.asarray(u, dtype=np.float64)
        phi_s = self.phi[s]  # (..., A, k)
        p_s = p[s]
        proj = np.einsum("...ak,...k->...a", phi_s, u)
        mean_phi = np.einsum("...a,...ak->...k", p_s, phi_s)
        mean_proj = np.einsum("...a,...a->...", p_s, proj)
        second = np.einsum("...a,...ak->...k", p_s * proj, phi_s)
        return -(second - mean_phi * mean_proj[..., None])

    def policy_bounds(self) -> PolicyBounds:
        D = float(np.linalg.norm(self.phi, axis=-1).max())
        return PolicyBounds(2.0 * D, D**2, 2.0 * D**3)


class SoftmaxTabularPolicy(SoftmaxLinearPolicy):
    """Tabular softmax: ``theta[s * A + a]`` is the logit of action a in state s."""

    def __init__(self, n_states: int, n_actions: int):
        S, A = n_states, n_actions
        super().__init__(np.eye(S * A).reshape(S, A, S * A))

    @classmethod
    def for_mdp(cls, mdp) -> "SoftmaxTabularPolicy":
        return cls(mdp.n_states, mdp.n_actions)

    def policy_bounds(self) -> PolicyBounds:
        # |e_a - pi|^2 <= 2; the per-state Hessian is a covariance of one-hot
        # vectors (operator norm <= 1/2); its directional derivative is a third
        # central moment bounded by 1/2 * sqrt(2)
        return PolicyBounds(math.sqrt(2.0), 0.5, 1.0 / math.sqrt(2.0))


def make_policy(spec: dict, env):
    """Build a policy from a configuration mapping (see ``docs/config.md``)."""
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "softmax":
        return SoftmaxTabularPolicy.for_mdp(env)
    if kind in ("gaussian-linear", "cauchy-linear"):
        feat = spec.pop("features", "raw")
        seed = int(spec.pop("feature_seed", 0))
        n_feat = int(spec.pop("n_features", 16))
        if feat == "raw":
            features = RawFeatures(env.state_dim, bias=True, state_bound=spec.pop("state_bound", None))
        elif feat == "tanh":
            features = TanhFeatures.random(env.state_dim, n_feat, seed=seed)
        elif feat == "fourier":
            features = FourierFeatures.random(env.state_dim, n_feat, seed=seed)
        else:
            raise ValueError(f"unknown feature map {feat!r}")
        sigma = float(spec.pop("sigma", 1.0))
        if kind == "gaussian-linear":
            return GaussianLinearPolicy(features, sigma, env.action_dim, **spec)
        return CauchyLinearPolicy(features, sigma, env.action_dim)
    raise ValueError(f"unknown policy type {kind!r}")
