import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfvar.errors import LuminalVelocity
from wfvar.minkowski import (
    CausalClass,
    FourVector,
    boost_matrix,
    classify,
    gamma_of_velocity,
    mink_dot,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_mink_dot_examples():
    assert mink_dot(FourVector(1, 0, 0, 0), FourVector(1, 0, 0, 0)) == 1.0
    assert mink_dot(FourVector(1, 1, 0, 0), FourVector(1, 1, 0, 0)) == 0.0
    # (2,1,0,0).(1,0,1,0) = 2*1 - 1*0 - 0*1 - 0*0 = 2
    assert mink_dot(FourVector(2, 1, 0, 0), FourVector(1, 0, 1, 0)) == 2.0


@given(st.tuples(finite, finite, finite, finite),
       st.tuples(finite, finite, finite, finite),
       st.floats(-10, 10, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_mink_dot_symmetric_bilinear(a, b, c):
    fa, fb = FourVector(*a), FourVector(*b)
    assert mink_dot(fa, fb) == pytest.approx(mink_dot(fb, fa), rel=1e-12, abs=1e-9)
    lhs = mink_dot(c * fa, fb)
    assert lhs == pytest.approx(c * mink_dot(fa, fb), rel=1e-10, abs=1e-6)


def test_classify_examples():
    assert classify(FourVector(1, 0, 0, 0), 0.0) is CausalClass.TIMELIKE
    assert classify(FourVector(0, 1, 0, 0), 0.0) is CausalClass.SPACELIKE
    assert classify(FourVector(1, 0.6, 0.8, 0), 1e-12) is CausalClass.LIGHTLIKE


def test_classify_default_tolerance_scales():
    big = FourVector(1e4, 1e4, 0, 0)  # null up to roundoff at large magnitude
    assert classify(big) is CausalClass.LIGHTLIKE


def test_gamma_examples():
    assert gamma_of_velocity([0, 0, 0]) == 1.0
    assert gamma_of_velocity([0.6, 0, 0]) == pytest.approx(1.25, rel=1e-15)
    with pytest.raises(LuminalVelocity):
        gamma_of_velocity([1.0, 0, 0])


def _random_timelike(rng, future=True):
    n = rng.normal(size=3)
    v = rng.uniform(0, 0.95) * n / np.linalg.norm(n)
    t = 1.0 if future else -1.0
    g = gamma_of_velocity(v)
    return g * np.array([t, *(t * v)])


def test_reverse_schwartz_timelike():
    rng = np.random.default_rng(11)
    for _ in range(500):
        a = _random_timelike(rng)
        b = _random_timelike(rng)
        lhs = mink_dot(a, b) ** 2
        rhs = mink_dot(a, a) * mink_dot(b, b)
        assert lhs >= rhs * (1 - 1e-12)
    # equality iff parallel
    a = _random_timelike(rng)
    b = 2.5 * a
    assert mink_dot(a, b) ** 2 == pytest.approx(mink_dot(a, a) * mink_dot(b, b), rel=1e-12)


def test_reverse_schwartz_timelike_spacelike_strict():
    rng = np.random.default_rng(12)
    for _ in range(500):
        a = _random_timelike(rng)
        s = rng.normal(size=4)
        s[0] = 0.3 * np.linalg.norm(s[1:])  # guarantee spacelike
        assert mink_dot(s, s) < 0
        assert mink_dot(a, s) ** 2 > mink_dot(a, a) * mink_dot(s, s)


def test_boost_invariance():
    rng = np.random.default_rng(13)
    for _ in range(200):
        v = rng.uniform(-0.95, 0.95, size=3) * rng.uniform(0, 1)
        if v @ v >= 1:
            continue
        L = boost_matrix(v)
        a = rng.normal(size=4) * 10
        b = rng.normal(size=4) * 10
        assert mink_dot(L @ a, L @ b) == pytest.approx(mink_dot(a, b), rel=1e-10, abs=1e-8)


def test_orthogonal_lightlike_are_parallel():
    rng = np.random.default_rng(14)
    for _ in range(100):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        a = np.array([1.0, *n])
        b = 3.7 * a
        assert abs(mink_dot(a, b)) < 1e-12
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        if abs(m @ n) > 0.999:
            continue
        c = np.array([1.0, *m])  # lightlike, not parallel to a
        assert abs(mink_dot(a, c)) > 1e-6


def test_four_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        FourVector(np.nan, 0, 0, 0)
