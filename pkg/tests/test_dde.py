import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicholson_periodic.dde import (
    HistorySegment,
    NonFiniteState,
    OutOfRange,
    _hermite,
    _hermite_deriv,
    default_step,
    integrate,
    integrate_field,
    interpolate,
)

TWO_PI = 2 * math.pi


def linear_delay(t, x, past):
    return (-past(t - 1.0)[0],)


def exact_linear_delay(t):
    # x' = -x(t - 1), x = 1 on [-1, 0]
    if t <= 1:
        return 1 - t
    if t <= 2:
        return 1 - t + (t - 1) ** 2 / 2
    return 1 - t + (t - 1) ** 2 / 2 - (t - 2) ** 3 / 6


def test_method_of_steps_exact_on_polynomial_pieces():
    hist = HistorySegment.constant((1.0,), 0.0, 1.0)
    traj = integrate_field(linear_delay, hist, 3.0, 0.01, 1.0, (1.0,))
    assert abs(traj(1.0)[0]) < 1e-10
    for t in (0.37, 1.0, 1.5, 2.0, 2.71, 3.0):
        assert traj(t)[0] == pytest.approx(exact_linear_delay(t), abs=1e-12)


def test_zero_history_stays_zero(eq16):
    sys_ = eq16(2, 2)
    traj = integrate(sys_, HistorySegment.constant((0.0, 0.0), 0.0, 7.0), 4 * math.pi)
    _, x, dx = traj.arrays()
    assert np.all(x == 0.0) and np.all(dx == 0.0)


def test_fourth_order_convergence(eq16):
    sys_ = eq16(2, 3)
    hist = HistorySegment.from_function(
        lambda t: (1 + 0.3 * math.sin(t), 1.5 + 0.2 * math.cos(t)),
        -7.0, 0.0, n=4096,
        dfn=lambda t: (0.3 * math.cos(t), -0.2 * math.sin(t)),
    )
    T = 4 * math.pi
    ts = np.linspace(0, T, 97)
    ref = integrate(sys_, hist, T, TWO_PI / 4096).sample(ts)
    errs = [
        np.max(np.abs(integrate(sys_, hist, T, TWO_PI / n).sample(ts) - ref)) for n in (64, 128)
    ]
    assert errs[0] / errs[1] >= 12


def test_nodes_are_reproduced(eq16):
    traj = integrate(eq16(2, 2), HistorySegment.constant((1.0, 1.0), 0.0, 7.0), 3.0)
    for k in range(0, len(traj.t), 37):
        assert traj(traj.t[k]) == traj.x[k]
        assert traj.derivative(traj.t[k]) == pytest.approx(traj.dx[k], abs=1e-14)
    sampled = traj.sample(np.array(traj.t[::50]))
    assert np.array_equal(sampled, np.array(traj.x[::50]))


def test_dense_output_continuous_across_history(eq16):
    traj = integrate(eq16(2, 2), HistorySegment.constant((1.0, 1.0), 0.0, 7.0), 1.0)
    assert traj(-1e-14) == pytest.approx(traj(1e-14), abs=1e-12)
    assert traj(-3.0) == (1.0, 1.0)
    assert interpolate(traj, 0.5) == traj(0.5)
    with pytest.raises(OutOfRange):
        interpolate(traj, 1.5)
    with pytest.raises(OutOfRange):
        traj(-8.0)


@given(
    c=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    s=st.floats(0, 1),
)
@settings(max_examples=100, deadline=None)
def test_hermite_reproduces_cubics(c, s):
    p = lambda t: c[0] + c[1] * t + c[2] * t**2 + c[3] * t**3
    dp = lambda t: c[1] + 2 * c[2] * t + 3 * c[3] * t**2
    t0, t1 = 0.5, 1.7
    u = t0 + s * (t1 - t0)
    args = (t0, t1, (p(t0),), (p(t1),), (dp(t0),), (dp(t1),))
    assert _hermite(u, *args)[0] == pytest.approx(p(u), abs=1e-12)
    assert _hermite_deriv(u, *args)[0] == pytest.approx(dp(u), abs=1e-11)


def test_delayed_lookups_are_causal():
    seen = []
    hist = HistorySegment.constant((1.0,), 0.0, 1.0)

    def recording(t, x, past):
        seen.append((t, t - 0.8))
        return (-past(t - 0.8)[0],)

    traj = integrate_field(recording, hist, 2.0, 0.05, 0.8)
    nodes = np.array(traj.t)
    for t, s in seen:
        # the latest node completed before a stage at time t
        done = nodes[nodes < t - 1e-12]
        assert s <= (done[-1] if done.size else 0.0) + 1e-12


def test_acausal_field_is_rejected():
    hist = HistorySegment.constant((1.0,), 0.0, 1.0)
    with pytest.raises(RuntimeError):
        integrate_field(lambda t, x, past: (-past(t)[0],), hist, 1.0, 0.1, 0.5)


def test_step_must_be_below_delay(eq16):
    hist = HistorySegment.constant((1.0, 1.0), 0.0, 7.0)
    with pytest.raises(ValueError):
        integrate(eq16(2, 2), hist, 10.0, h=8.0)
    with pytest.raises(ValueError):
        integrate(eq16(2, 2), hist, 10.0, h=7.0)
    with pytest.raises(ValueError):
        integrate(eq16(2, 2), HistorySegment.constant((1.0, 1.0), 0.0, 2.0), 10.0)


def test_blow_up_is_reported():
    hist = HistorySegment.constant((1.0,), 0.0, 1.0)
    with pytest.raises(NonFiniteState):
        integrate_field(lambda t, x, past: (x[0] ** 3 * 1e3,), hist, 5.0, 0.1, 0.5)


@given(x1=st.floats(0.01, 20), x2=st.floats(0.01, 20))
@settings(max_examples=10, deadline=None)
def test_positive_history_stays_positive(eq16, x1, x2):
    traj = integrate(eq16(2, 2), HistorySegment.constant((x1, x2), 0.0, 7.0), 20.0)
    assert np.all(traj.arrays()[1] > 0)


def test_long_run_within_bounds(eq16):
    # soft check: the trajectory settles inside a modest box, well within (eps0, r0)
    traj = integrate(eq16(2, 2), HistorySegment.constant((1.0, 1.0), 0.0, 7.0), 40 * math.pi)
    tail = traj.sample(np.linspace(20 * math.pi, 40 * math.pi, 2000))
    assert tail.min() > 1.0 and tail.max() < 3.0


def test_default_step(eq16):
    assert default_step(eq16(2, 2)) == TWO_PI / 1024


def test_csv_export(tmp_path, eq16):
    traj = integrate(eq16(2, 2), HistorySegment.constant((1.0, 1.0), 0.0, 7.0), 1.0)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2"]
    assert len(rows) == len(traj.t) + 1
    for row, t, x in zip(rows[1:], traj.t, traj.x):
        assert float(row[0]) == t
        assert (float(row[1]), float(row[2])) == x


def test_advance_continues_in_place(eq16):
    sys_ = eq16(2, 2)
    hist = HistorySegment.constant((1.0, 1.0), 0.0, 7.0)
    once = integrate(sys_, hist, 10.0)
    twice = integrate(sys_, hist, 4.0).advance(10.0)
    assert twice.t_end == pytest.approx(10.0)
    assert twice(10.0) == pytest.approx(once(10.0), abs=1e-12)
