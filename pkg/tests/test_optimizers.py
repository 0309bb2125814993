import numpy as np
import pytest

from normpg.core import Kind, RngHandle, ScheduleSpec, momentum, schedule_arrays, step_size
from normpg.envs import random_walk_mdp, two_state_mdp
from normpg.optimizers import (
    GradSample,
    OptimizerState,
    PolicyGradientOracle,
    harpg_split,
    lookahead_point,
    make_oracle,
    resolve_algorithm,
    run,
    run_single,
    step_harpg,
    step_nmpg,
    step_npgigt,
    step_vanilla,
    trajectories_per_iteration,
)
from normpg.policies import SoftmaxTabularPolicy
from normpg.synth import SynthProblem

ALGORITHMS = ("VanillaPG", "NMPG", "NPGIGT", "HARPG", "NHARPG")


class ConstantOracle:
    """Returns the same gradient everywhere; used to isolate the momentum algebra."""

    def __init__(self, G):
        self.G = np.asarray(G, dtype=float)

    def sample_grad(self, theta, n, rng):
        return GradSample(self.G.copy(), n, n, 0.0, 0.0)

    def sample_hvp(self, theta, u, n, rng):
        return np.zeros_like(self.G), n, n


def spec(kind, T=10, **kw):
    return ScheduleSpec(kind, T, **kw)


def test_vanilla_examples():
    s = OptimizerState.initial([0.0], spec(Kind.VANILLA_PG, gamma0=0.5))
    assert np.array_equal(step_vanilla(s, np.zeros((3, 1))).theta, [0.0])
    assert step_vanilla(s, np.array([[1.0], [3.0]])).theta == pytest.approx([1.0])


def test_vanilla_contraction_on_quadratic():
    # J = -theta^2 / 2 with exact gradients: theta_{t+1} = (1 - gamma_t) theta_t
    sched = spec(Kind.VANILLA_PG, T=30, gamma0=0.5)
    rec = run_single("VanillaPG", SynthProblem("quadratic", dim=1, sigma=0.0), sched, [1.0], 0, record_theta=True)
    steps, _ = schedule_arrays(sched)
    assert np.allclose(rec.thetas[:, 0], np.concatenate([[1.0], np.cumprod(1 - steps)]), rtol=1e-14)


def test_vanilla_fixed_step_halving():
    # with the step pinned at 0.5 (state held at t = 0) the iterates are 0.5^t
    sched = spec(Kind.VANILLA_PG, gamma0=0.5)
    p = SynthProblem("quadratic", dim=1, sigma=0.0)
    theta = np.array([1.0])
    for t in range(1, 11):
        theta = step_vanilla(OptimizerState.initial(theta, sched), p.grad(theta)).theta
        assert theta[0] == 0.5**t


def test_nmpg_examples():
    s = OptimizerState(np.zeros(2), np.zeros(2), np.array([5.0, 5.0]), 0, spec(Kind.NMPG))
    g = np.array([[3.0, 4.0]])
    nxt = step_nmpg(s, g)
    assert np.array_equal(nxt.direction, [3.0, 4.0])
    assert np.linalg.norm(nxt.theta - s.theta) == pytest.approx(step_size(s.schedule, 0), rel=1e-15)


def test_nmpg_constant_gradient_keeps_direction():
    G = np.array([0.3, -1.2, 2.0])
    rec = run_single("NMPG", ConstantOracle(G), spec(Kind.NMPG, T=10), np.zeros(3), 0, record_theta=True)
    assert np.allclose(rec.directions, G, rtol=1e-15, atol=0)


def test_normalized_step_length():
    p = SynthProblem("quadratic", dim=5, sigma=1.0, sigma_h=0.5)
    for alg in ("NMPG", "NPGIGT", "NHARPG"):
        rec = run_single(alg, p, spec(alg, T=200), np.ones(5), 3)
        assert np.allclose(rec["step_len"], rec["step_size"], rtol=1e-12), alg


def test_zero_direction_holds_position():
    rec = run_single("NMPG", ConstantOracle(np.zeros(2)), spec(Kind.NMPG, T=5), np.ones(2), 0, record_theta=True)
    assert np.array_equal(rec.thetas, np.ones((6, 2)))


def test_lookahead_examples():
    ahead = lookahead_point([1.0], [0.0], 0.5)
    assert ahead == pytest.approx([2.0])
    assert 0.5 * ahead[0] + 0.5 * 0.0 == 1.0
    assert np.array_equal(lookahead_point([1.0, 2.0], [0.0, 7.0], 1.0), [1.0, 2.0])
    assert np.array_equal(lookahead_point([1.0, 2.0], [1.0, 2.0], 0.3), [1.0, 2.0])
    with pytest.raises(ValueError):
        lookahead_point([1.0], [0.0], 0.0)


def test_npgigt_lookahead_identity_in_runs():
    rec = run_single("NPGIGT", SynthProblem("quadratic", dim=4, sigma=1.0), spec(Kind.NPGIGT, T=300),
                     np.ones(4), 1)
    assert np.nanmax(rec["lookahead_residual"]) < 1e-12


def test_npgigt_first_step_uses_current_point():
    seen = []

    class Recording(ConstantOracle):
        def sample_grad(self, theta, n, rng):
            seen.append(np.array(theta))
            return super().sample_grad(theta, n, rng)

    s = OptimizerState(np.ones(2), np.zeros(2), np.zeros(2), 0, spec(Kind.NPGIGT))
    step_npgigt(s, Recording([1.0, 0.0]), RngHandle(0).generator())
    assert np.array_equal(seen[0], np.ones(2))


def test_harpg_fresh_gradient_when_not_moved():
    p = SynthProblem("quadratic", dim=3, sigma=1.0, sigma_h=1.0)
    s = OptimizerState.initial(np.ones(3), spec(Kind.NHARPG))
    g_rng, h_rng = RngHandle(4).generator(), RngHandle(4).generator()
    nxt, info = step_harpg(s, p, g_rng, normalized=True)
    expect = p.sample_grad(np.ones(3), 1, h_rng).grad
    assert np.allclose(nxt.direction, expect, rtol=1e-15)
    assert info.trajectories == 2


def test_harpg_tracks_exact_gradient_on_quadratic():
    p = SynthProblem("quadratic", dim=4, sigma=0.0, sigma_h=0.0)
    for alg in ("HARPG", "NHARPG"):
        rec = run_single(alg, p, spec(alg, T=100, gamma0=0.5), np.arange(1.0, 5.0), 2, record_theta=True)
        exact = np.stack([p.grad(th) for th in rec.thetas[:-1]])
        assert np.max(np.abs(rec.directions - exact)) < 1e-10


def test_harpg_split():
    assert harpg_split(1) == (1, 1)
    assert harpg_split(4) == (2, 2)
    assert harpg_split(5) == (3, 2)
    assert harpg_split(4, split=False) == (4, 4)
    with pytest.raises(ValueError):
        harpg_split(1, split=True)


@pytest.mark.parametrize("alg", ALGORITHMS)
@pytest.mark.parametrize("batch", [1, 3])
def test_trajectory_budget(alg, batch):
    mdp = two_state_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    oracle = PolicyGradientOracle(mdp, pol, 4)
    rec = run_single(alg, oracle, spec(alg, T=2, gamma0=0.1), np.zeros(pol.dim), 0, batch_size=batch)
    per = trajectories_per_iteration(alg, batch)
    expected_single = {"VanillaPG": 1, "NMPG": 1, "NPGIGT": 1, "HARPG": 2, "NHARPG": 2}[alg]
    if batch == 1:
        assert per == expected_single
    assert list(rec["trajectories"]) == [per, 2 * per]
    assert list(rec["system_probes"]) == [4 * per, 8 * per]


def test_same_seed_same_run():
    mdp = random_walk_mdp()
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    sched = spec(Kind.NHARPG, T=50, gamma0=0.3, horizon_override=10)
    a, b = run("NHARPG", mdp, sched, np.zeros(pol.dim), seeds=(7, 7), policy=pol)
    c, = run("NHARPG", mdp, sched, np.zeros(pol.dim), seeds=(8,), policy=pol)
    for col in a.columns:
        if col != "wall_time":
            assert np.array_equal(a[col], b[col], equal_nan=True), col
    assert not np.array_equal(a["mean_return"], c["mean_return"])


def test_non_finite_parameters_abort_run():
    rec = run_single("VanillaPG", ConstantOracle([np.inf]), spec(Kind.VANILLA_PG, T=10, gamma0=1.0), [0.0], 0)
    assert not rec.ok and "iteration 0" in rec.status
    assert len(rec) == 1


def test_run_record_columns():
    rec = run_single("NPGIGT", SynthProblem(dim=2), spec(Kind.NPGIGT, T=20), np.ones(2), 0)
    assert len(rec) == 20 and rec.ok
    assert np.array_equal(rec["t"], np.arange(20))
    assert np.allclose(rec["eta"], [momentum(spec(Kind.NPGIGT, T=20), t) for t in range(20)])
    assert np.all(np.isnan(rec["q"]))


def test_validation_and_aliases():
    assert resolve_algorithm("n-harpg") is Kind.NHARPG
    assert resolve_algorithm(Kind.NMPG) is Kind.NMPG
    with pytest.raises(ValueError):
        resolve_algorithm("adam")
    with pytest.raises(ValueError):
        OptimizerState(np.zeros(2), np.zeros(3), np.zeros(2), 0, spec(Kind.NMPG))
    with pytest.raises(ValueError):
        PolicyGradientOracle(two_state_mdp(), SoftmaxTabularPolicy(2, 2), 0)
    with pytest.raises(ValueError):
        run_single("NMPG", SynthProblem(dim=1), spec(Kind.NMPG, T=1), [0.0], 0)
    with pytest.raises(ValueError):
        step_vanilla(OptimizerState.initial([0.0], spec(Kind.VANILLA_PG, gamma0=1.0)), np.zeros((0, 1)))


def test_make_oracle_uses_schedule_horizon():
    mdp = two_state_mdp(0.9)
    pol = SoftmaxTabularPolicy.for_mdp(mdp)
    oracle = make_oracle(mdp, pol, spec(Kind.NHARPG, T=99, discount=0.9))
    assert oracle.H == 47
    assert make_oracle(mdp, pol, spec(Kind.NHARPG, T=99), horizon_override=5).H == 5
