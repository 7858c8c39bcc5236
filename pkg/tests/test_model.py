import math

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nicholson_periodic.coeffs import PeriodicCoefficient, harmonic_series
from nicholson_periodic.model import (
    BirthTerm,
    MortalityTerm,
    NicholsonSystem,
    PoleError,
    birth_f,
    mortality,
    phi,
    rhs,
)

E = math.e
m11 = MortalityTerm(harmonic_series(5, [(0.25, 1, "sin")]), PeriodicCoefficient.constant(4))


def test_birth_f_values():
    assert birth_f(0.0) == 0.0
    assert birth_f(1.0) == pytest.approx(1 / E, rel=1e-15)
    expected = float(mpmath.mpf(2) * mpmath.exp(-2))
    assert birth_f(2.0) == pytest.approx(expected, rel=1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
def test_birth_f_increasing_below_one(a, b):
    assume(b - a > 1e-9)
    assert birth_f(a) < birth_f(b)


@given(st.floats(1, 30), st.floats(1, 30))
def test_birth_f_decreasing_above_one(a, b):
    assume(b - a > 1e-9)
    assert birth_f(a) > birth_f(b)


@given(st.floats(0, 50))
def test_birth_f_bounded_by_inverse_e(x):
    assert birth_f(x) <= 1 / E + 1e-16


def test_mortality_examples():
    const = MortalityTerm(PeriodicCoefficient.constant(5), PeriodicCoefficient.constant(4))
    assert mortality(const, 0.3, 0.0) == 0.0
    assert mortality(const, 0.3, 4.0) == 2.5
    assert mortality(m11, math.pi / 2, 1.0) == pytest.approx(5.25 * 1 / (4 + 1), rel=1e-15)


def test_mortality_pole():
    with pytest.raises(PoleError):
        mortality(m11, 0.0, -4.0)


@given(st.floats(0, 2 * math.pi), st.floats(0, 100), st.floats(0, 100))
def test_mortality_increasing_and_bounded(t, a, b):
    assume(b - a > 1e-6)
    assert mortality(m11, t, a) < mortality(m11, t, b)
    assert mortality(m11, t, b) <= m11.delta.eval(t)


def test_rhs_origin_equilibrium(eq16):
    assert rhs(eq16(2, 3), 1.3, (0.0, 0.0), ([0.0], [0.0])) == (0.0, 0.0)


def test_rhs_example_value(eq16):
    # term by term at t=0, x=(1,1): sin 0 = 0, cos 0 = 1
    p1 = -5 * 1 / (4 + 1) + 2 * 1.5 * (1 / E) + 2.25 * 1 / (2 + 1)
    p2 = -4.5 * 1 / (4 + 1) + 3 * 1.25 * (1 / E) + 2 * 1 / (3 + 1)
    r = rhs(eq16(2, 3), 0.0, (1.0, 1.0), ([1.0], [1.0]))
    assert r[0] == pytest.approx(p1, rel=1e-14)
    assert r[1] == pytest.approx(p2, rel=1e-14)
    assert r[0] == pytest.approx(0.85363832351432696, rel=1e-14)
    assert r[1] == pytest.approx(0.97954790439290871, rel=1e-14)


@given(
    lam=st.floats(1e-3, 1),
    t=st.floats(-10, 10),
    x1=st.floats(0, 20),
    x2=st.floats(0, 20),
    d1=st.floats(0, 20),
    d2=st.floats(0, 20),
)
@settings(deadline=None)
def test_rhs_linear_in_lambda(eq16, lam, t, x1, x2, d1, d2):
    s = eq16(2, 2)
    full = rhs(s, t, (x1, x2), ([d1], [d2]))
    part = rhs(s, t, (x1, x2), ([d1], [d2]), lam)
    assert part == (lam * full[0], lam * full[1])


def test_rhs_lambda_half(eq16):
    s = eq16(2, 2)
    a = rhs(s, 0.7, (1.2, 0.4), ([0.9], [2.0]))
    b = rhs(s, 0.7, (1.2, 0.4), ([0.9], [2.0]), 0.5)
    assert a == (2 * b[0], 2 * b[1])


def test_rhs_rejects_bad_lambda(eq16):
    with pytest.raises(ValueError):
        rhs(eq16(), 0.0, (1, 1), ([1], [1]), 0.0)


def test_single_birth_matches_classical_formula(eq16):
    s = eq16(1.7, 1.1)
    for t, x, d in [(0.3, (1.0, 2.0), (0.5, 3.0)), (4.0, (0.2, 0.1), (1.5, 0.7))]:
        b1, b2 = s.births1[0].b.eval(t), s.births2[0].b.eval(t)
        classical = (
            -mortality(s.m11, t, x[0]) + b1 * birth_f(d[0]) + mortality(s.m12, t, x[1]),
            -mortality(s.m22, t, x[1]) + b2 * birth_f(d[1]) + mortality(s.m21, t, x[0]),
        )
        assert rhs(s, t, x, ([d[0]], [d[1]])) == classical


def test_fast_field_matches_rhs(eq16):
    s = eq16(2, 3)
    for t in (0.0, 1.1, 5.5):
        assert s.fast(t, 1.2, 0.8, [0.5], [1.7]) == pytest.approx(
            rhs(s, t, (1.2, 0.8), ([0.5], [1.7])), rel=1e-14
        )


def test_multi_delay_sums_birth_terms():
    C = PeriodicCoefficient.constant
    m = MortalityTerm(C(3), C(1))
    s = NicholsonSystem(
        m, m, m, m,
        (BirthTerm(C(1), C(1)), BirthTerm(C(2), C(2))),
        (BirthTerm(C(1.5), C(1)),),
        2 * math.pi,
    )
    r = rhs(s, 0.0, (1.0, 1.0), ([0.5, 2.0], [1.0]))
    assert r[0] == pytest.approx(1 * birth_f(0.5) + 2 * birth_f(2.0), rel=1e-14)
    assert s.max_delay == 2 and s.min_delay == 1
    with pytest.raises(ValueError):
        rhs(s, 0.0, (1.0, 1.0), ([0.5], [1.0]))


def test_phi_on_constants(eq16):
    s = eq16(2, 2)
    one = lambda t: 1.0
    p1, p2 = phi(s, (one, one))
    for t in (0.0, math.pi / 2, math.pi):
        r = rhs(s, t, (1.0, 1.0), ([1.0], [1.0]))
        assert (p1(t), p2(t)) == r
    z = lambda t: 0.0
    q1, q2 = phi(s, (z, z))
    assert q1(0.4) == 0.0 and q2(2.0) == 0.0


def test_phi_constant_coefficients_is_time_independent(symmetric_system):
    u = lambda t: 0.7
    v = lambda t: 1.9
    p1, p2 = phi(symmetric_system, (u, v))
    expected = rhs(symmetric_system, 0.0, (0.7, 1.9), ([0.7], [1.9]))
    for t in (0.0, 1.0, 3.3):
        assert (p1(t), p2(t)) == expected


def test_positivity_validation():
    C = PeriodicCoefficient.constant
    with pytest.raises(ValueError):
        MortalityTerm(harmonic_series(0.1, [(0.2, 1, "sin")]), C(1))
    with pytest.raises(ValueError):
        BirthTerm(C(1), C(0))


def test_period_mismatch_rejected():
    C = PeriodicCoefficient.constant
    m = MortalityTerm(C(1), C(1))
    with pytest.raises(ValueError):
        NicholsonSystem(m, m, m, m, (BirthTerm(C(1), C(1, period=3.0)),), (BirthTerm(C(1), C(1)),), 2 * math.pi)
