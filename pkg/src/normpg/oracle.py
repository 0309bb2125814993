"""Exact quantities on finite MDPs.

Truncated returns and gradients come from forward dynamic programming over the
state distribution and its parameter Jacobian; infinite-horizon quantities
come from linear solves.  A second, independent path enumerates every
trajectory for small horizons.  Policies must be discrete (expose
``all_probs`` and a vectorized ``score``).
"""
from __future__ import annotations

import itertools
import math
from typing import NamedTuple, Optional

import numpy as np

from .estimators import TrajectoryBatch, grad_estimate

ENUMERATION_LIMIT = 10**7


def _checked(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta has non-finite entries")
    return theta


def _grid(mdp):
    S, A = mdp.n_states, mdp.n_actions
    return np.repeat(np.arange(S), A).reshape(S, A), np.tile(np.arange(A), S).reshape(S, A)


def all_scores(policy, theta) -> np.ndarray:
    """Scores for every (s, a) pair, shape (S, A, d)."""
    s, a = _grid(policy)
    return policy.score(theta, s, a)


def policy_transition(mdp, pi: np.ndarray) -> np.ndarray:
    return np.einsum("sa,sat->st", pi, mdp.transition)


# ---------------------------------------------------------------------------
# truncated objective

def exact_JH(mdp, policy, theta, H: int) -> float:
    """E[sum_{t<H} discount^t r_t] by propagating the state distribution."""
    theta = _checked(theta)
    if H < 1:
        raise ValueError("H must be >= 1")
    pi = policy.all_probs(theta)
    r_pi = (pi * mdp.reward).sum(axis=1)
    P_pi = policy_transition(mdp, pi)
    d = mdp.init_dist.copy()
    total = 0.0
    for t in range(H):
        total += mdp.discount**t * d @ r_pi
        d = d @ P_pi
    return float(total)


def _grad_dp(mdp, policy, theta, H: int) -> np.ndarray:
    pi = policy.all_probs(theta)
    scores = all_scores(policy, theta)
    dim = scores.shape[-1]
    d = mdp.init_dist.copy()
    D = np.zeros((mdp.n_states, dim))  # Jacobian of d w.r.t. theta
    grad = np.zeros(dim)
    for t in range(H):
        x = d[:, None] * pi  # joint (s, a) occupancy at step t
        dx = D[:, None, :] * pi[..., None] + x[..., None] * scores
        grad += mdp.discount**t * np.einsum("sa,sak->k", mdp.reward, dx)
        d = np.einsum("sa,sat->t", x, mdp.transition)
        D = np.einsum("sak,sat->tk", dx, mdp.transition)
    return grad


def enumerate_trajectories(mdp, policy, theta, H: int):
    """Every length-H trajectory with its probability under pi_theta.

    Returns ``(batch, probs)``; zero-probability paths are dropped.
    """
    S, A = mdp.n_states, mdp.n_actions
    if (S * A) ** H > ENUMERATION_LIMIT:
        raise ValueError(f"(S*A)^H = {(S * A) ** H} exceeds the enumeration limit")
    pi = policy.all_probs(_checked(theta))
    pairs = np.array(list(itertools.product(range(S * A), repeat=H))).reshape(-1, H)
    states, actions = pairs // A, pairs % A
    prob = mdp.init_dist[states[:, 0]] * pi[states[:, 0], actions[:, 0]]
    for t in range(1, H):
        prob = prob * mdp.transition[states[:, t - 1], actions[:, t - 1], states[:, t]]
        prob = prob * pi[states[:, t], actions[:, t]]
    keep = prob > 0
    states, actions = states[keep], actions[keep]
    batch = TrajectoryBatch(states, actions, mdp.reward[states, actions])
    return batch, prob[keep]


def exact_grad_JH(mdp, policy, theta, H: int, method: str = "auto") -> np.ndarray:
    """Exact gradient of J_H.

    ``method="enumerate"`` averages the REINFORCE estimator over every
    trajectory; ``"dp"`` runs the forward recursion; ``"auto"`` enumerates for
    H <= 4 when the trajectory space is small enough.
    """
    theta = _checked(theta)
    if H < 1:
        raise ValueError("H must be >= 1")
    small = (mdp.n_states * mdp.n_actions) ** H <= ENUMERATION_LIMIT
    if method == "auto":
        method = "enumerate" if H <= 4 and small else "dp"
    if method == "enumerate":
        batch, prob = enumerate_trajectories(mdp, policy, theta, H)
        return prob @ grad_estimate(batch, policy, theta, mdp.discount)
    if method == "dp":
        return _grad_dp(mdp, policy, theta, H)
    raise ValueError(f"unknown method {method!r}")


def exact_hvp_JH(mdp, policy, theta, H: int, u, h: Optional[float] = None) -> np.ndarray:
    """Central difference of the DP gradient along ``u``; error O(h^2)."""
    theta = _checked(theta)
    u = np.asarray(u, dtype=np.float64)
    norm = np.linalg.norm(u)
    if norm == 0:
        return np.zeros_like(theta)
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(theta))
    e = u / norm
    plus = _grad_dp(mdp, policy, theta + h * e, H)
    minus = _grad_dp(mdp, policy, theta - h * e, H)
    return norm * (plus - minus) / (2.0 * h)


def exact_hessian_JH(mdp, policy, theta, H: int, h: Optional[float] = None) -> np.ndarray:
    dim = np.asarray(theta).shape[0]
    cols = [exact_hvp_JH(mdp, policy, theta, H, e, h) for e in np.eye(dim)]
    Hm = np.stack(cols, axis=1)
    return 0.5 * (Hm + Hm.T)


# ---------------------------------------------------------------------------
# infinite horizon

class ExactEval(NamedTuple):
    J: float
    grad: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    visitation: np.ndarray


def visitation(mdp, pi: np.ndarray) -> np.ndarray:
    """Discounted state visitation (1 - g) sum_t g^t P(s_t = .)."""
    P_pi = policy_transition(mdp, pi)
    M = np.eye(mdp.n_states) - mdp.discount * P_pi.T
    return (1.0 - mdp.discount) * np.linalg.solve(M, mdp.init_dist)


def qva_of(mdp, pi: np.ndarray):
    """(Q, V, A) tables of an arbitrary stochastic policy by a direct linear solve."""
    P_pi = policy_transition(mdp, pi)
    r_pi = (pi * mdp.reward).sum(axis=1)
    V = np.linalg.solve(np.eye(mdp.n_states) - mdp.discount * P_pi, r_pi)
    Q = mdp.reward + mdp.discount * mdp.transition @ V
    return Q, V, Q - V[:, None]


def exact_qva(mdp, policy, theta):
    return qva_of(mdp, policy.all_probs(_checked(theta)))


def exact_eval(mdp, policy, theta) -> ExactEval:
    """Infinite-horizon J, its gradient (policy gradient theorem), Q/V/A and visitation."""
    theta = _checked(theta)
    pi = policy.all_probs(theta)
    Q, V, A = qva_of(mdp, pi)
    d = visitation(mdp, pi)
    scores = all_scores(policy, theta)
    grad = np.einsum("s,sa,sa,sak->k", d, pi, Q, scores) / (1.0 - mdp.discount)
    return ExactEval(float(mdp.init_dist @ V), grad, V, Q, A, d)


def exact_fisher(mdp, policy, theta):
    """Fisher matrix under the discounted visitation and its minimum eigenvalue."""
    theta = _checked(theta)
    pi = policy.all_probs(theta)
    d = visitation(mdp, pi)
    scores = all_scores(policy, theta)
    F = np.einsum("s,sa,sak,sal->kl", d, pi, scores, scores)
    F = 0.5 * (F + F.T)
    return F, float(np.linalg.eigvalsh(F)[0])


def optimal_policy(mdp, tol: float = 1e-13, max_iter: int = 100000):
    """Greedy deterministic optimal policy by value iteration; ties go to the lowest action."""
    V = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        Q = mdp.reward + mdp.discount * mdp.transition @ V
        V_new = Q.max(axis=1)
        if np.max(np.abs(V_new - V)) < tol:
            V = V_new
            break
        V = V_new
    Q = mdp.reward + mdp.discount * mdp.transition @ V
    best = np.argmax(Q >= Q.max(axis=1, keepdims=True) - 1e-10, axis=1)
    pi = np.zeros((mdp.n_states, mdp.n_actions))
    pi[np.arange(mdp.n_states), best] = 1.0
    return pi, float(mdp.init_dist @ V)


def transfer_error(mdp, policy, theta, pi_star: Optional[np.ndarray] = None, rcond: float = 1e-10) -> float:
    """Squared compatible-approximation residual under the optimal policy's visitation.

    ``w* = F(theta)^+ grad J(theta)`` with singular values below
    ``rcond * sigma_max`` discarded; the residual
    ``A(s, a) - (1 - g) w*^T score(s, a)`` is averaged over
    ``s ~ d^{pi*}``, ``a ~ pi*``.
    """
    theta = _checked(theta)
    if pi_star is None:
        pi_star, _ = optimal_policy(mdp)
    ev = exact_eval(mdp, policy, theta)
    F, _ = exact_fisher(mdp, policy, theta)
    w = np.linalg.pinv(F, rcond=rcond, hermitian=True) @ ev.grad
    scores = all_scores(policy, theta)
    resid = ev.A - (1.0 - mdp.discount) * scores @ w
    d_star = visitation(mdp, pi_star)
    return float(np.einsum("s,sa,sa->", d_star, pi_star, resid**2))


class DominationCheck(NamedTuple):
    holds: bool
    lhs: float  # eps' + |grad J|
    rhs: float  # sqrt(2 mu) (J* - J)
    mu_F: float
    eps_bias: float


def gradient_domination_check(mdp, policy, theta, M_g: Optional[float] = None) -> DominationCheck:
    """Evaluate ``eps' + |grad J| >= sqrt(2 mu) (J* - J)`` from exact quantities.

    ``mu_F`` is the smallest positive eigenvalue of the Fisher matrix (the
    smallest eigenvalue when that is positive); this matches the
    pseudo-inverse used for ``w*``.
    """
    if M_g is None:
        M_g = policy.policy_bounds().M_g
    pi_star, J_star = optimal_policy(mdp)
    ev = exact_eval(mdp, policy, theta)
    F, _ = exact_fisher(mdp, policy, theta)
    eig = np.linalg.eigvalsh(F)
    positive = eig[eig > 1e-10 * max(eig[-1], 1e-300)]
    mu_F = float(positive[0]) if positive.size else 0.0
    eps_bias = transfer_error(mdp, policy, theta, pi_star)
    mu = mu_F**2 / (2.0 * M_g**2)
    eps_prime = mu_F * math.sqrt(max(eps_bias, 0.0)) / (M_g * (1.0 - mdp.discount))
    lhs = eps_prime + float(np.linalg.norm(ev.grad))
    rhs = math.sqrt(2.0 * mu) * (J_star - ev.J)
    return DominationCheck(lhs >= rhs - 1e-12, lhs, rhs, mu_F, eps_bias)
