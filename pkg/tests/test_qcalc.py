import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from light_sgd.qcalc import Q_LIMIT_TOL, QDomainError, QPoleError, q_exp, q_exp_deriv, q_log

mpmath.mp.dps = 40


def mp_q_log(x, q):
    x, q = mpmath.mpf(x), mpmath.mpf(q)
    return (1 - x ** (-q)) / q


def mp_q_exp(u, q):
    u, q = mpmath.mpf(u), mpmath.mpf(q)
    return (1 - q * u) ** (-1 / q)


def test_q_log_of_one_is_zero():
    assert q_log(1.0, 0.7) == 0.0


def test_q_log_half_at_q_one():
    assert q_log(0.5, 1.0) == pytest.approx(-1.0, abs=1e-15)


def test_q_log_small_q_matches_ln():
    # oracle: the deformed formula itself at q = 1e-8, in 40-digit arithmetic
    oracle = float(mp_q_log(0.3, 1e-8))
    assert abs(oracle - math.log(0.3)) < 1e-6
    assert q_log(0.3, 0.0) == pytest.approx(math.log(0.3), abs=1e-15)
    assert abs(q_log(0.3, 1e-8) - oracle) < 1e-6


def test_q_exp_examples():
    assert q_exp(0.0, 1.3) == 1.0
    assert q_exp(-1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    oracle = float(mp_q_exp(0.25, 1e-8))
    assert abs(oracle - math.exp(0.25)) < 1e-6
    assert abs(q_exp(0.25, 1e-8) - oracle) < 1e-6


@pytest.mark.parametrize("x", [0.1, 0.37, 1.0, 2.5, 10.0])
@pytest.mark.parametrize("q", [1e-3, 0.5, 1.0, 2.0])
def test_q_log_matches_high_precision(x, q):
    assert q_log(x, q) == pytest.approx(float(mp_q_log(x, q)), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("x", [0.1, 0.5, 3.0, 10.0])
def test_jump_at_limit_tolerance_is_second_order(x):
    # just above the switch the deformed log is ln x - q ln(x)^2 / 2 + O(q^2)
    below = q_log(x, Q_LIMIT_TOL)
    above = q_log(x, Q_LIMIT_TOL * (1 + 1e-9))
    assert below == math.log(x)
    expected_jump = Q_LIMIT_TOL * math.log(x) ** 2 / 2
    assert abs(below - above) == pytest.approx(expected_jump, rel=1e-3, abs=1e-15)
    assert abs(below - above) < 3e-6


def test_errors():
    with pytest.raises(QDomainError):
        q_log(0.0, 1.0)
    with pytest.raises(QDomainError):
        q_log(-1.0, 0.0)
    with pytest.raises(QDomainError):
        q_log(1.0, -0.1)
    with pytest.raises(QDomainError):
        q_log(float("inf"), 1.0)
    with pytest.raises(QPoleError):
        q_exp(1.0, 1.0)
    with pytest.raises(QPoleError):
        q_exp(np.array([0.0, 0.6]), 2.0)


@given(
    x=st.floats(0.05, 5.0),
    q=st.sampled_from([0.0, 1e-4, 0.5, 1.0, 2.0]),
)
def test_inverse_pair(x, q):
    assert abs(q_exp(q_log(x, q), q) - x) <= 1e-10 * max(1.0, x)


@given(x=st.floats(0.1, 10.0))
def test_limit_consistency_log(x):
    assert abs(q_log(x, 1e-7) - math.log(x)) <= 1e-6


@given(u=st.floats(-5.0, 2.0))
def test_limit_consistency_exp(u):
    assert abs(q_exp(u, 1e-7) - math.exp(u)) <= 1e-6 * math.exp(u)


@given(
    a=st.floats(0.01, 50.0),
    b=st.floats(0.01, 50.0),
    q=st.sampled_from([0.0, 0.3, 1.0, 2.5]),
)
def test_q_log_strictly_increasing(a, b, q):
    if a == b:
        return
    lo, hi = sorted((a, b))
    if hi / lo - 1 < 1e-9:
        return
    assert q_log(lo, q) < q_log(hi, q)


@given(
    a=st.floats(-20.0, 0.45),
    b=st.floats(-20.0, 0.45),
    q=st.sampled_from([0.0, 0.3, 1.0, 2.0]),
)
def test_q_exp_strictly_increasing(a, b, q):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-6:
        return
    assert q_exp(lo, q) < q_exp(hi, q)


@pytest.mark.parametrize("q", [0.0, 0.5, 1.0, 2.0])
def test_q_exp_deriv_finite_difference(q):
    for u in (-3.0, -0.4, 0.0, 0.3):
        h = 1e-6
        fd = (q_exp(u + h, q) - q_exp(u - h, q)) / (2 * h)
        assert q_exp_deriv(u, q) == pytest.approx(fd, rel=1e-7)


def test_array_inputs():
    x = np.array([0.2, 1.0, 4.0])
    np.testing.assert_allclose(q_exp(q_log(x, 1.0), 1.0), x, rtol=1e-12)
    assert isinstance(q_log(2.0, 1.0), float)
