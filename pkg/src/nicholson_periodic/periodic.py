"""Periodic orbits from forward simulation: residuals, extraction and checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import Rectangle
from .dde import HistorySegment, OutOfRange, Trajectory, integrate, write_csv
from .model import NicholsonSystem

RESIDUAL_POINTS = 512
ORBIT_POINTS = 512
DEFAULT_TOL = 1e-4
DEFAULT_DEFECT_TOL = 1e-2
DEFAULT_MAX_PERIODS = 200


class NotConverged(RuntimeError):
    def __init__(self, max_periods: int, residual: float, trace: list[float]):
        super().__init__(
            f"no periodic regime after {max_periods} periods (last residual {residual:.3e})"
        )
        self.max_periods = max_periods
        self.residual = residual
        self.trace = trace


@dataclass
class PeriodicOrbit:
    omega: float
    t_end: float
    times: np.ndarray
    states: np.ndarray
    residual: float
    defect: float
    periods: int
    residual_trace: list[float] = field(default_factory=list)
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def phases(self) -> np.ndarray:
        return np.mod(self.times, self.omega)

    def summary(self) -> dict:
        return {
            "omega": self.omega,
            "t_end": self.t_end,
            "periods": self.periods,
            "residual": self.residual,
            "defect": self.defect,
            "x1_min": float(self.states[:, 0].min()),
            "x1_max": float(self.states[:, 0].max()),
            "x2_min": float(self.states[:, 1].min()),
            "x2_max": float(self.states[:, 1].max()),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_csv(fh, self.times, self.states, ["x1", "x2"])


def periodicity_residual(
    traj: Trajectory, omega: float, t_end: float | None = None, points: int = RESIDUAL_POINTS
) -> float:
    """``max |X(t) - X(t - omega)|`` over a uniform grid on ``[t_end - omega, t_end]``."""
    if t_end is None:
        t_end = traj.t_end
    if t_end - 2 * omega < traj.history.t_start - 1e-12 or t_end > traj.t_end + 1e-9:
        raise OutOfRange(f"trajectory does not cover [{t_end - 2 * omega}, {t_end}]")
    ts = t_end - omega + np.arange(points + 1) * (omega / points)
    ts[-1] = min(ts[-1], traj.t_end)
    now = traj.sample(ts)
    before = traj.sample(ts - omega)
    return float(np.max(np.abs(now - before)))


def orbit_defect(traj: Trajectory, times: np.ndarray) -> float:
    """Max over ``times`` of ``|X'(t) - F(t, X(t), delayed)|`` with Hermite derivatives."""
    worst = 0.0
    for s in times:
        s = float(s)
        x = traj(s)
        dx = traj.derivative(s)
        f = traj.func(s, x, traj)
        worst = max(worst, max(abs(a - b) for a, b in zip(dx, f)))
    return worst


def find_periodic(
    sys: NicholsonSystem,
    history: HistorySegment,
    max_periods: int = DEFAULT_MAX_PERIODS,
    tol: float = DEFAULT_TOL,
    h: float | None = None,
    defect_tol: float = DEFAULT_DEFECT_TOL,
) -> PeriodicOrbit:
    """Integrate period by period until the periodicity residual drops below ``tol``."""
    if max_periods < 3:
        raise ValueError("max_periods must be at least 3")
    omega = sys.omega
    t0 = history.t_end
    traj = integrate(sys, history, t0 + 2 * omega, h)
    trace: list[float] = []
    for k in range(2, max_periods + 1):
        if k > 2:
            traj.advance(t0 + k * omega)
        t_end = t0 + k * omega
        r = periodicity_residual(traj, omega, t_end)
        trace.append(r)
        if r < tol:
            times = t_end - omega + np.arange(ORBIT_POINTS) * (omega / ORBIT_POINTS)
            states = traj.sample(times)
            # node midpoints, where Hermite derivatives are not exact
            nodes = np.asarray(traj.t)
            nodes = nodes[nodes >= t_end - omega - 1e-12]
            mids = 0.5 * (nodes[:-1] + nodes[1:])
            defect = orbit_defect(traj, np.concatenate([times, mids]))
            if defect > defect_tol:
                continue
            return PeriodicOrbit(
                omega=omega,
                t_end=t_end,
                times=times,
                states=states,
                residual=r,
                defect=defect,
                periods=k,
                residual_trace=trace,
                trajectory=traj,
            )
    raise NotConverged(max_periods, trace[-1], trace)


def verify_in_rectangle(orbit: PeriodicOrbit, rect: Rectangle) -> bool:
    s = orbit.states
    return bool(np.all(s >= rect.lo) and np.all(s <= rect.hi))


def replay_history(orbit: PeriodicOrbit, sys: NicholsonSystem) -> HistorySegment:
    """The final stretch of the orbit's trajectory, long enough to restart from."""
    if orbit.trajectory is None:
        raise ValueError("orbit carries no trajectory")
    span = max(sys.max_delay, orbit.omega) + orbit.omega
    return orbit.trajectory.segment(orbit.t_end - span, orbit.t_end)
