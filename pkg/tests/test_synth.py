import math

import numpy as np
import pytest

from normpg.core import RngHandle
from normpg.synth import SynthProblem, fit_rate


def rng(seed=0):
    return RngHandle(seed).generator()


def e1(d):
    x = np.zeros(d)
    x[0] = 1.0
    return x


def test_gradient_examples():
    p = SynthProblem("quadratic", mu=1.0, dim=4, sigma=0.0)
    assert np.array_equal(p.grad_sample(e1(4), rng()), -e1(4))
    theta = rng(1).standard_normal(4)
    assert np.array_equal(p.grad_sample(theta, rng()), p.grad(theta))


def test_hvp_examples():
    p = SynthProblem("quadratic", mu=2.0, dim=3, sigma=0.0, sigma_h=0.0)
    assert np.array_equal(p.hvp_sample(np.ones(3), e1(3), rng()), -2 * e1(3))
    noisy = SynthProblem("quadratic", mu=2.0, dim=3, sigma_h=5.0)
    assert np.array_equal(noisy.hvp_sample(np.ones(3), np.zeros(3), rng()), np.zeros(3))


def test_gradient_noise_unbiased_at_optimum():
    p = SynthProblem("quadratic", mu=1.0, dim=3, sigma=2.0)
    g = rng(2)
    n = 10**5
    draws = np.stack([p.grad_sample(np.zeros(3), g) for _ in range(n)])
    assert np.all(np.abs(draws.mean(axis=0)) <= 3 * 2.0 / math.sqrt(n))
    assert np.mean(np.sum(draws**2, axis=1)) == pytest.approx(3 * 4.0, rel=0.02)


def test_hvp_noise_unbiased():
    p = SynthProblem("quadratic", mu=1.5, dim=3, sigma_h=1.0)
    g = rng(3)
    u = np.array([1.0, -2.0, 0.5])
    n = 10**5
    draws = np.stack([p.hvp_sample(np.zeros(3), u, g) for _ in range(n)])
    sd = np.linalg.norm(u) / math.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) + 1.5 * u) <= 3 * sd)


def test_quadratic_equality_case():
    g = rng(4)
    for mu in (0.3, 1.0, 7.0):
        p = SynthProblem("quadratic", mu=mu, dim=6, J_star=2.0)
        for _ in range(20):
            theta = 3 * g.standard_normal(6)
            lhs = math.sqrt(2 * mu * (p.J_star - p.value(theta)))
            assert lhs == pytest.approx(np.linalg.norm(p.grad(theta)), rel=1e-12)


def test_smoothed_norm_domination_and_derivatives():
    p = SynthProblem("smoothed-norm", mu=2.0, dim=3, eps_floor=0.1)
    g = rng(5)
    h = 1e-6
    for _ in range(30):
        theta = g.standard_normal(3) * g.choice([0.05, 0.5, 5.0])
        lhs = p.eps_floor + np.linalg.norm(p.grad(theta))
        assert lhs >= math.sqrt(2 * p.mu) * p.suboptimality(theta) - 1e-15
        u = g.standard_normal(3)
        fd_grad = (p.value(theta + h * u) - p.value(theta - h * u)) / (2 * h)
        assert p.grad(theta) @ u == pytest.approx(fd_grad, rel=1e-6, abs=1e-10)
        fd_hv = (p.grad(theta + h * u) - p.grad(theta - h * u)) / (2 * h)
        assert np.allclose(p.hessian_vec(theta, u), fd_hv, rtol=1e-5, atol=1e-9)


def test_oracle_protocol_batches():
    p = SynthProblem("quadratic", dim=2, sigma=1.0)
    s = p.sample_grad(np.ones(2), 4, rng(6))
    assert s.n_samples == 4 and s.probes == 4 and s.mean_return == p.value(np.ones(2))
    hv, n, probes = p.sample_hvp(np.ones(2), np.ones(2), 3, rng(6))
    assert (n, probes) == (3, 3) and np.array_equal(hv, -np.ones(2))


def test_validation():
    with pytest.raises(ValueError):
        SynthProblem("cubic")
    with pytest.raises(ValueError):
        SynthProblem("quadratic", mu=0.0)
    with pytest.raises(ValueError):
        SynthProblem("smoothed-norm", eps_floor=0.0)
    with pytest.raises(ValueError):
        SynthProblem(dim=3).grad(np.ones(2))


def test_fit_rate_exact_power_laws():
    # records are indexed by iteration; entry 0 lies outside every valid window
    t = np.arange(10001, dtype=float)
    t[0] = 1.0
    assert fit_rate([t**-0.5], (10, 10000)) == pytest.approx(-0.5, abs=1e-9)
    assert fit_rate([3.0 * t**-0.4, 0.2 * t**-0.4], (1, 5000)) == pytest.approx(-0.4, abs=1e-9)
    # median across seeds
    assert fit_rate([t**-0.3, t**-0.5, t**-0.9], (1, 10000)) == pytest.approx(-0.5, abs=1e-9)


def test_fit_rate_rejects_bad_input():
    t = np.arange(1, 101, dtype=float)
    bad = t**-0.5
    bad[50] = 0.0
    with pytest.raises(ValueError):
        fit_rate([bad], (10, 100))
    with pytest.raises(ValueError):
        fit_rate([t], (0, 50))
    with pytest.raises(ValueError):
        fit_rate([t], (200, 300))
