"""Acceptance criteria 1-10; each test prints one PASS/FAIL line per measured quantity.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.  Criteria 7
and 8 take a few minutes together.
"""
import pytest

from normpg.bench import checks
from normpg.bench.checks import _timed


def report(*results):
    for r in results:
        print(r.line())
    return results


def test_criterion_01_estimator_unbiasedness():
    r, = report(_timed(checks.check_unbiased_enumeration))
    assert r.passed and r.seconds < 1.0


def test_criterion_02_hvp_identity():
    weighted, curvature = report(_timed(checks.check_hvp_identity), _timed(checks.check_hvp_curvature_term))
    assert weighted.passed and curvature.passed
    assert weighted.seconds + curvature.seconds < 5.0


@pytest.mark.xfail(strict=True, reason="the plain difference of g(tau, .) omits the score-weighted term "
                                        "that makes the estimator unbiased")
def test_criterion_02_hvp_plain_difference_literal():
    r, = report(_timed(checks.check_hvp_plain_difference))
    assert r.passed


def test_criterion_03_harpg_correction_unbiased():
    r, = report(_timed(checks.check_harpg_correction))
    assert r.passed and r.seconds < 10.0


def test_criterion_04_truncation_bounds():
    r, = report(_timed(checks.check_truncation_bounds))
    assert r.passed and r.seconds < 10.0


def test_criterion_05_normalized_step_exactness():
    r, = report(_timed(checks.check_normalized_steps))
    assert r.passed


def test_criterion_06_exact_oracle_degeneracy():
    r, = report(_timed(checks.check_harpg_degeneracy))
    assert r.passed


@pytest.mark.slow
def test_criterion_07_rate_slopes():
    results = report(*checks.check_rates())
    assert len(results) == 4
    assert all(r.passed for r in results)


@pytest.mark.slow
def test_criterion_08_point_mass_smoke():
    r, = report(_timed(checks.check_smoke))
    assert r.passed


def test_criterion_09_determinism():
    r, = report(_timed(checks.check_determinism))
    assert r.passed


def test_criterion_10_variance_bound():
    r, = report(_timed(checks.check_variance_bound))
    assert r.passed and r.seconds < 30.0
