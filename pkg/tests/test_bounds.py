import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicholson_periodic.bounds import (
    BoundsUnderflow,
    HypothesisViolated,
    Rectangle,
    build_rectangle,
    conjugate_r1,
    lower_threshold,
    upper_threshold,
)
from nicholson_periodic.coeffs import Extrema
from nicholson_periodic.degree import AveragedMap, miranda_check
from nicholson_periodic.model import birth_f

from conftest import constant_system

E = math.e

# values recorded from a 200-step mpmath bisection of y - e^y = log r0 - r0
R1_OF_2 = 0.40637573995995990767
R1_OF_10 = 0.00045420555346482690093


def ext(lo, hi=None):
    hi = lo if hi is None else hi
    return Extrema(lo, hi, 0.0, 0.0)


def bisect_oracle(fn, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_upper_threshold_patch1():
    k = 3 / E + 2.25
    r = upper_threshold(ext(4.75, 5.25), ext(4.0), 3.0, 2.25)
    assert r == pytest.approx(4 * k / (4.75 - k), rel=1e-14)
    oracle = bisect_oracle(lambda R: 4.75 * R / (4 + R) - k, 0.0, 1e6)
    assert r == pytest.approx(oracle, rel=1e-10)
    assert r == pytest.approx(9.6067899312581456, rel=1e-13)


def test_upper_threshold_vanishing_k():
    assert upper_threshold(ext(3.0), ext(2.0), 1e-12, 1e-12) < 1e-11


def test_upper_threshold_boundary():
    with pytest.raises(HypothesisViolated):
        upper_threshold(ext(2.0), ext(1.0), E * 1.0, 1.0)


@given(
    d11=st.floats(1, 10),
    frac=st.floats(0.01, 0.95),
    share=st.floats(0.05, 0.95),
    c11=st.floats(0.1, 10),
)
@settings(max_examples=100, deadline=None)
def test_upper_threshold_matches_bisection(d11, frac, share, c11):
    k = frac * d11
    b_sup = share * k * E
    d12 = (1 - share) * k
    r = upper_threshold(ext(d11), ext(c11), b_sup, d12)
    kk = b_sup / E + d12
    oracle = bisect_oracle(lambda R: d11 * R / (c11 + R) - kk, 0.0, 1e6)
    assert abs(r - oracle) <= 1e-10 * max(1.0, r)


@given(d11=st.floats(2, 10), c11=st.floats(0.1, 5), b=st.floats(0.1, 2), db=st.floats(0.01, 1))
@settings(max_examples=50, deadline=None)
def test_upper_threshold_monotonicity(d11, c11, b, db):
    d12 = 0.2
    base = upper_threshold(ext(d11), ext(c11), b, d12)
    assert upper_threshold(ext(d11), ext(c11), b + db, d12) >= base
    assert upper_threshold(ext(d11 + db), ext(c11), b, d12) < base


def test_conjugate_r1():
    assert conjugate_r1(1.0) == 1.0
    r = conjugate_r1(2.0)
    assert r == pytest.approx(R1_OF_2, abs=1e-14)
    assert birth_f(r) == pytest.approx(birth_f(2.0), abs=1e-12)
    r10 = conjugate_r1(10.0)
    assert r10 == pytest.approx(R1_OF_10, rel=1e-12)
    assert birth_f(10.0) < r10 < E * birth_f(10.0)


def test_conjugate_r1_large_r0_does_not_underflow():
    r = conjugate_r1(170.5)
    assert 0 < r < 1e-70
    assert math.log(r) - r == pytest.approx(math.log(170.5) - 170.5, rel=1e-14)


@given(st.floats(1.0, 600.0))
@settings(max_examples=100, deadline=None)
def test_conjugate_r1_level(r0):
    r1 = conjugate_r1(r0)
    assert 0 < r1 <= 1 <= r0
    assert abs(birth_f(r1) - birth_f(r0)) <= 1e-12


def test_lower_threshold_eq16_patch1():
    r1 = 0.3
    eps = lower_threshold(ext(4.75, 5.25), ext(4.0), ext(1.75, 2.25), ext(2.0), 1.0, r1)
    gap = lambda e: 5.25 / (4 + e) - 1.75 / (2 + e) - 1.0 * math.exp(-e)
    grid = np.linspace(0, r1, 100_001)[1:]
    crossings = [e for e in grid if gap(e) >= 0]
    if crossings:
        assert eps == pytest.approx(crossings[0], abs=r1 / 1e5)
    else:
        assert eps == r1
    assert gap(0.0) == pytest.approx(0.4375 - 1.0)


def test_lower_threshold_crossing_found():
    # lhs - rhs = 1/(1+e) - 0.2/(1+e) - 0.9 e^-e starts at -0.1 and turns positive
    gap = lambda e: 1 / (1 + e) - 0.2 / (1 + e) - 0.9 * math.exp(-e)
    eps = lower_threshold(ext(1.0), ext(1.0), ext(0.2), ext(1.0), 0.9, 1.0)
    grid = np.linspace(0, 1.0, 100_001)[1:]
    i = next(i for i, e in enumerate(grid) if gap(e) >= 0)
    oracle = bisect_oracle(gap, grid[i - 1], grid[i])
    assert eps == pytest.approx(oracle, abs=1e-11)


def test_lower_threshold_marginal():
    with pytest.raises(HypothesisViolated):
        lower_threshold(ext(2.0), ext(1.0), ext(1.0), ext(1.0), 1.0, 0.5)


def test_lower_threshold_no_crossing():
    assert lower_threshold(ext(1.0), ext(1.0), ext(0.5), ext(1.0), 3.0, 0.4) == 0.4


def test_build_rectangle_eq16(eq16):
    b = build_rectangle(eq16(2, 2))
    assert 0 < b.eps0 < b.r1 <= 1 <= b.r0
    assert abs(birth_f(b.r1) - birth_f(b.r0)) <= 1e-12
    assert b.r0_patch1 == pytest.approx(9.6067899312581456, rel=1e-13)
    assert b.r0_patch2 == pytest.approx(170.34316849497537, rel=1e-12)
    assert b.r0 == pytest.approx(170.34316849497537 * 1.001, rel=1e-12)
    assert b.rect == Rectangle(b.eps0, b.r0)
    assert b.eps0 == pytest.approx(0.5 * min(b.eps_star_patch1, b.eps_star_patch2, b.r1))


def test_build_rectangle_symmetric_floor():
    # both thresholds equal and below one -> r0 is the floor 1 (times the margin)
    s = constant_system(3, 1, 0.5, 1, 0.5, 1, 3, 1, 2.6, 2.6)
    b = build_rectangle(s)
    assert b.r0_patch1 == b.r0_patch2 < 1
    assert b.r0 == pytest.approx(1.001)


def test_build_rectangle_symmetric_common_value(symmetric_system):
    b = build_rectangle(symmetric_system)
    assert b.r0_patch1 == b.r0_patch2
    assert b.r0 == pytest.approx(b.r0_patch1 * 1.001, rel=1e-15)


def test_build_rectangle_rejects_failed_h2(eq16):
    with pytest.raises(HypothesisViolated):
        build_rectangle(eq16(2, 3))


def test_rectangle_validation():
    with pytest.raises(ValueError):
        Rectangle(0.0, 1.0)
    with pytest.raises(ValueError):
        Rectangle(2.0, 1.0)


def test_build_rectangle_reports_underflow(eq16):
    # r0 near 892 puts r1 = e^(log r0 - r0) below the smallest double
    with pytest.raises(BoundsUnderflow):
        build_rectangle(eq16(1.0, 2.14))


@given(alpha=st.floats(0.9, 4.5), beta=st.floats(0.85, 2.15))
@settings(max_examples=25, deadline=None)
def test_rectangle_satisfies_miranda(eq16, alpha, beta):
    try:
        b = build_rectangle(eq16(alpha, beta))
    except BoundsUnderflow:
        return
    cert = miranda_check(AveragedMap(eq16(alpha, beta)), b.rect, 64)
    assert cert.pattern_holds
