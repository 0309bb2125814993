import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normpg.core import (
    Kind,
    RngHandle,
    ScheduleError,
    ScheduleSpec,
    as_param,
    harpg_gamma0,
    horizon,
    make_rng,
    momentum,
    schedule_arrays,
    step_size,
)


def test_step_size_examples():
    assert step_size(ScheduleSpec(Kind.NHARPG, 10, M_g=1, mu_F=1), 0) == 3.0
    assert step_size(ScheduleSpec(Kind.NPGIGT, 10, M_g=2, mu_F=4), 4) == pytest.approx(0.5, rel=1e-15)
    assert step_size(ScheduleSpec(Kind.VANILLA_PG, 10, gamma0=0.02), 0) == pytest.approx(0.02, rel=1e-15)


def test_momentum_examples():
    assert momentum(ScheduleSpec(Kind.NPGIGT, 10), 0) == 1.0
    assert momentum(ScheduleSpec(Kind.NPGIGT, 10), 2) == pytest.approx(0.574349, abs=1e-6)
    assert momentum(ScheduleSpec(Kind.NHARPG, 10), 8) == pytest.approx(0.2, rel=1e-15)


def test_horizon_examples():
    assert horizon(ScheduleSpec(Kind.NHARPG, 99, discount=0.9)) == 47
    assert horizon(ScheduleSpec(Kind.NPGIGT, 99, discount=0.9, variant="detailed")) == 83
    assert horizon(ScheduleSpec(Kind.NMPG, 1, discount=1e-9)) == 1


def test_horizon_detailed_multipliers():
    # ceil(c * 10 * ln(T + shift)) for discount 0.9, T = 99
    assert horizon(ScheduleSpec(Kind.NHARPG, 99, discount=0.9, variant="detailed")) == math.ceil(15 * math.log(100))
    assert horizon(ScheduleSpec(Kind.HARPG, 99, discount=0.9, variant="detailed")) == math.ceil(20 * math.log(103))
    assert horizon(ScheduleSpec(Kind.NMPG, 99, discount=0.9, variant="detailed")) == math.ceil(50 / 3 * math.log(100))


def test_horizon_override():
    assert horizon(ScheduleSpec(Kind.NMPG, 99, horizon_override=7)) == 7
    with pytest.raises(ScheduleError):
        horizon(ScheduleSpec(Kind.NMPG, 99, horizon_override=0))


def test_tuned_and_special_forms():
    assert step_size(ScheduleSpec(Kind.NPGIGT, 10, gamma0=0.5), 3) == pytest.approx(2 * 0.5 / 5)
    assert step_size(ScheduleSpec(Kind.NPGIGT_FOSP, 10), 2) == pytest.approx(0.5 ** (5 / 7))
    assert momentum(ScheduleSpec(Kind.NPGIGT_FOSP, 10), 2) == pytest.approx(0.5 ** (4 / 7))
    assert momentum(ScheduleSpec(Kind.NMPG, 10), 2) == pytest.approx(0.5 ** (2 / 3))
    assert momentum(ScheduleSpec(Kind.HARPG, 10, variant="detailed"), 5) == pytest.approx(0.5)
    assert step_size(ScheduleSpec(Kind.HARPG, 10, gamma0=0.4), 2) == pytest.approx(0.4 * math.sqrt(0.5))


def test_harpg_auto_gamma0_main():
    spec = ScheduleSpec(Kind.HARPG, 99, M_g=1, mu_F=1, discount=0.9, sigma_g=2.0, L_g=3.0, D_h=4.0)
    H = horizon(spec)
    a = 1 / (8 * math.sqrt(6) * (3.0 + 2.0 + 4.0 * 0.9**H))
    b = math.sqrt(2) / (math.sqrt(3) * 2.0)
    assert harpg_gamma0(spec) == pytest.approx(min(a, b), rel=1e-15)
    assert step_size(spec, 0) == pytest.approx(min(a, b), rel=1e-15)


def test_harpg_auto_gamma0_detailed():
    spec = ScheduleSpec(Kind.HARPG, 99, M_g=1, mu_F=1, discount=0.9, sigma_g=0.01, L_g=3.0, D_h=4.0,
                        variant="detailed")
    H = horizon(spec)
    a = 1 / (8 * math.sqrt(3) * (3.0 + 0.01 + 4.0 * 0.9 ** (2 * H)))
    b = 1 / (0.01 * math.sqrt(3 * 0.5))
    assert harpg_gamma0(spec) == pytest.approx(min(a, b), rel=1e-15)


def test_schedule_errors():
    spec = ScheduleSpec(Kind.NMPG, 5)
    with pytest.raises(ScheduleError):
        step_size(spec, 5)
    with pytest.raises(ScheduleError):
        momentum(spec, -1)
    with pytest.raises(ScheduleError):
        step_size(ScheduleSpec(Kind.HARPG, 5), 0)
    with pytest.raises(ScheduleError):
        step_size(ScheduleSpec(Kind.VANILLA_PG, 5), 0)
    with pytest.raises(ScheduleError):
        ScheduleSpec(Kind.NMPG, 0)
    with pytest.raises(ScheduleError):
        ScheduleSpec(Kind.NMPG, 5, discount=1.0)
    with pytest.raises(ScheduleError):
        ScheduleSpec(Kind.NMPG, 5, variant="other")
    with pytest.raises(ValueError):
        ScheduleSpec("SGD", 5)


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(list(Kind)), variant=st.sampled_from(["main", "detailed"]),
       T=st.integers(1, 400), gamma0=st.floats(1e-3, 4.0))
def test_schedule_invariants(kind, variant, T, gamma0):
    spec = ScheduleSpec(kind, T, gamma0=gamma0, variant=variant)
    steps, etas = schedule_arrays(spec)
    assert np.all(steps > 0)
    assert np.all((etas > 0) & (etas <= 1))
    assert etas[0] == 1.0
    assert np.all(np.diff(etas) <= 0)


def test_schedule_purity():
    spec = ScheduleSpec(Kind.NPGIGT, 100)
    assert [step_size(spec, t) for t in range(100)] == [step_size(spec, t) for t in range(100)]


def test_momentum_recursion_sanity():
    t = np.arange(10**6 + 1, dtype=float)
    for q in (2 / 3, 4 / 5, 1.0):
        eta = (2 / (t + 2)) ** q
        assert np.all(eta[:-1] * (1 - eta[1:]) <= eta[1:])


def test_rng_reproducible_and_independent():
    a = RngHandle(7, (1,)).generator().random(1000)
    b = RngHandle(7, (1,)).generator().random(1000)
    c = RngHandle(7, (2,)).generator().random(1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # independent uniform streams: correlation should be small
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.15
    assert RngHandle(7).child(1) == RngHandle(7, (1,))
    assert RngHandle(3, 5).stream == (5,)


def test_rng_validation_and_coercion():
    with pytest.raises(ValueError):
        RngHandle(-1)
    with pytest.raises(ValueError):
        make_rng(None)
    g = np.random.default_rng(0)
    assert make_rng(g) is g
    assert np.array_equal(make_rng(4).random(3), RngHandle(4).generator().random(3))


def test_as_param():
    x = as_param([1, 2, 3])
    assert x.dtype == np.float64 and x.shape == (3,)
    with pytest.raises(ValueError):
        as_param([1.0, np.nan])
    with pytest.raises(ValueError):
        as_param([1.0, 2.0], dim=3)
    with pytest.raises(ValueError):
        as_param([])
