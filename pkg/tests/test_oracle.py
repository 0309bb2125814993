import math

import numpy as np
import pytest

from normpg import envs
from normpg.bench.checks import check_frozen_returns, check_oracle_consistency, run_suite
from normpg.core import RngHandle
from normpg.envs import FiniteMdp, random_walk_mdp, single_state_mdp, two_state_mdp
from normpg.oracle import (
    enumerate_trajectories,
    exact_eval,
    exact_fisher,
    exact_grad_JH,
    exact_hessian_JH,
    exact_hvp_JH,
    exact_JH,
    exact_qva,
    gradient_domination_check,
    optimal_policy,
    transfer_error,
)
from normpg.policies import SoftmaxLinearPolicy, SoftmaxTabularPolicy


def rng(seed=0):
    return RngHandle(seed).generator()


def with_reward(mdp, reward):
    return FiniteMdp(mdp.transition, np.asarray(reward, dtype=float), mdp.init_dist, mdp.discount)


def test_constant_reward_geometric_series():
    mdp = with_reward(random_walk_mdp(), np.full((5, 2), 0.7))
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = rng(1).standard_normal(pol.dim)
    for H in (1, 4, 30):
        assert exact_JH(mdp, pol, theta, H) == pytest.approx(0.7 * (1 - mdp.discount**H) / (1 - mdp.discount),
                                                             rel=1e-13)
    assert np.allclose(exact_hvp_JH(mdp, pol, theta, 10, np.ones(pol.dim)), 0.0, atol=1e-7)


def test_one_step_expectation():
    mdp = two_state_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = rng(2).standard_normal(pol.dim)
    pi = pol.all_probs(theta)
    assert exact_JH(mdp, pol, theta, 1) == pytest.approx(mdp.init_dist @ (pi * mdp.reward).sum(axis=1), rel=1e-14)


def test_dp_matches_enumeration():
    mdp = two_state_mdp(0.9)
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = np.zeros(pol.dim)
    batch, probs = enumerate_trajectories(mdp, pol, theta, 3)
    brute = probs @ (batch.rewards @ (0.9 ** np.arange(3)))
    assert exact_JH(mdp, pol, theta, 3) == pytest.approx(brute, rel=1e-12)
    for name, make in envs.BUNDLED_MDPS.items():
        m = make()
        p = SoftmaxTabularPolicy.for_mdp(m)
        th = rng(3).standard_normal(p.dim)
        a = exact_grad_JH(m, p, th, 3, "enumerate")
        b = exact_grad_JH(m, p, th, 3, "dp")
        assert np.linalg.norm(a - b) <= 1e-11 * np.linalg.norm(b), name


def test_single_state_closed_forms():
    r = np.array([1.0, -0.5, 0.25])
    mdp = single_state_mdp(r, 0.8)
    pol = SoftmaxTabularPolicy(1, 3)
    theta = np.array([0.2, -0.1, 0.4])
    pi = pol.all_probs(theta)[0]
    H = 6
    scale = (1 - 0.8**H) / 0.2
    assert exact_JH(mdp, pol, theta, H) == pytest.approx(scale * pi @ r, rel=1e-13)
    grad = scale * pi * (r - pi @ r)
    assert np.allclose(exact_grad_JH(mdp, pol, theta, H, "dp"), grad, rtol=1e-12)
    hess = scale * (np.diag(pi * (r - pi @ r)) - np.outer(pi, pi * (r - pi @ r)) - np.outer(pi * (r - pi @ r), pi))
    assert np.allclose(exact_hessian_JH(mdp, pol, theta, H), hess, atol=1e-8)
    ev = exact_eval(mdp, pol, theta)
    assert ev.J == pytest.approx(pi @ r / 0.2, rel=1e-13)
    assert np.allclose(ev.grad, pi * (r - pi @ r) / 0.2, rtol=1e-12)


def test_zero_rewards():
    mdp = with_reward(two_state_mdp(), np.zeros((2, 2)))
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = rng(4).standard_normal(pol.dim)
    assert np.array_equal(exact_grad_JH(mdp, pol, theta, 5), np.zeros(pol.dim))
    Q, V, A = exact_qva(mdp, pol, theta)
    assert not Q.any() and not V.any() and not A.any()
    assert np.array_equal(exact_hvp_JH(mdp, pol, theta, 5, np.zeros(pol.dim)), np.zeros(pol.dim))


def test_long_horizon_converges_to_infinite():
    mdp = random_walk_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = rng(5).standard_normal(pol.dim)
    ev = exact_eval(mdp, pol, theta)
    assert exact_JH(mdp, pol, theta, 3000) == pytest.approx(ev.J, rel=1e-10)
    assert np.allclose(exact_grad_JH(mdp, pol, theta, 3000, "dp"), ev.grad, rtol=1e-8, atol=1e-10)


def test_fisher_degenerates_for_near_deterministic_policy():
    mdp = single_state_mdp((1.0, 0.0), 0.9)
    pol = SoftmaxTabularPolicy(1, 2)
    F, _ = exact_fisher(mdp, pol, np.array([10.0, 0.0]))
    positive = np.linalg.eigvalsh(F)
    assert positive[-1] < 1e-3
    F0, m0 = exact_fisher(mdp, pol, np.zeros(2))
    assert np.allclose(F0, [[0.25, -0.25], [-0.25, 0.25]])
    assert m0 == pytest.approx(0.0, abs=1e-15)


def test_optimal_policy_and_tie_break():
    mdp = single_state_mdp((1.0, 1.0, 0.0), 0.5)
    pi, J = optimal_policy(mdp)
    assert np.array_equal(pi, [[1.0, 0.0, 0.0]])
    assert J == pytest.approx(2.0)


def test_transfer_error_full_and_rank_deficient():
    mdp = random_walk_mdp()
    full = SoftmaxTabularPolicy.for_mdp(mdp)
    theta = rng(6).standard_normal(full.dim)
    assert transfer_error(mdp, full, theta) == pytest.approx(0.0, abs=1e-12)
    # one shared feature per action: cannot represent state-dependent advantages
    phi = np.zeros((mdp.n_states, mdp.n_actions, 1))
    phi[:, 0, 0] = 1.0
    poor = SoftmaxLinearPolicy(phi)
    assert transfer_error(mdp, poor, np.array([0.3])) > 1e-6


def test_gradient_domination_holds_for_full_policy():
    mdp = two_state_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    g = rng(7)
    for _ in range(5):
        res = gradient_domination_check(mdp, pol, g.standard_normal(pol.dim))
        assert res.holds and res.mu_F > 0 and res.eps_bias >= 0


def test_frozen_returns_and_consistency_pass():
    assert check_frozen_returns().passed
    assert check_oracle_consistency().passed


def test_tampered_reward_fails_oracle_suite(monkeypatch):
    original = envs.BUNDLED_MDPS["two-state"]

    def tampered(*args, **kwargs):
        mdp = original(*args, **kwargs)
        reward = mdp.reward.copy()
        reward[0, 0] = -reward[0, 0]
        return with_reward(mdp, reward)

    monkeypatch.setitem(envs.BUNDLED_MDPS, "two-state", tampered)
    res = check_frozen_returns()
    assert not res.passed
    assert not all(r.passed for r in run_suite("oracle"))


def test_oracle_rejects_bad_input():
    mdp = two_state_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    with pytest.raises(ValueError):
        exact_JH(mdp, pol, np.zeros(pol.dim), 0)
    with pytest.raises(ValueError):
        exact_JH(mdp, pol, np.full(pol.dim, math.nan), 3)
    with pytest.raises(ValueError):
        exact_grad_JH(mdp, pol, np.zeros(pol.dim), 3, "magic")
