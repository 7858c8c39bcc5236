"""Method-of-steps RK4 integrator with cubic Hermite dense output.

The right-hand side has the form ``func(t, x, past)`` where ``past(s)``
returns the (interpolated) state at an earlier time ``s``.  Delayed lookups
always land in already completed steps because the step is kept below the
smallest delay.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .model import NicholsonSystem

State = tuple[float, ...]
Field = Callable[[float, State, Callable[[float], State]], Sequence[float]]

DEFAULT_STEPS_PER_PERIOD = 1024
BREAKPOINT_DEPTH = 5


class NonFiniteState(ArithmeticError):
    pass


class OutOfRange(ValueError):
    pass


def _hermite(s, t0, t1, y0, y1, d0, d1):
    h = t1 - t0
    u = (s - t0) / h
    u2 = u * u
    u3 = u2 * u
    h00 = 2 * u3 - 3 * u2 + 1
    h10 = u3 - 2 * u2 + u
    h01 = -2 * u3 + 3 * u2
    h11 = u3 - u2
    return tuple(
        h00 * a + h * h10 * da + h01 * b + h * h11 * db
        for a, b, da, db in zip(y0, y1, d0, d1)
    )


def _hermite_deriv(s, t0, t1, y0, y1, d0, d1):
    h = t1 - t0
    u = (s - t0) / h
    u2 = u * u
    g00 = (6 * u2 - 6 * u) / h
    g10 = 3 * u2 - 4 * u + 1
    g01 = (-6 * u2 + 6 * u) / h
    g11 = 3 * u2 - 2 * u
    return tuple(
        g00 * a + g10 * da + g01 * b + g11 * db
        for a, b, da, db in zip(y0, y1, d0, d1)
    )


def _locate(nodes: Sequence[float], s: float) -> int:
    """Index ``i`` with ``nodes[i] <= s <= nodes[i+1]``."""
    i = bisect.bisect_right(nodes, s) - 1
    return min(max(i, 0), len(nodes) - 2)


@dataclass(frozen=True)
class HistorySegment:
    """Initial data on ``[t_start, t_end]`` with node derivatives for Hermite lookup."""

    nodes: tuple[float, ...]
    values: tuple[State, ...]
    derivatives: tuple[State, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("history needs at least two nodes")
        if len(self.values) != len(self.nodes) or len(self.derivatives) != len(self.nodes):
            raise ValueError("nodes, values and derivatives must have equal length")
        if any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("history nodes must be strictly increasing")
        if not all(math.isfinite(v) for row in self.values for v in row):
            raise ValueError("history values must be finite")

    @classmethod
    def constant(cls, value: Sequence[float], t_end: float, span: float) -> HistorySegment:
        v = tuple(float(a) for a in value)
        zero = tuple(0.0 for _ in v)
        return cls((t_end - span, t_end), (v, v), (zero, zero))

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], Sequence[float]],
        t_start: float,
        t_end: float,
        n: int = 1024,
        dfn: Callable[[float], Sequence[float]] | None = None,
    ) -> HistorySegment:
        """Sample ``fn`` at ``n + 1`` nodes; derivatives by central differences if ``dfn`` is absent."""
        nodes = tuple(float(t) for t in np.linspace(t_start, t_end, n + 1))
        values = tuple(tuple(float(v) for v in fn(t)) for t in nodes)
        if dfn is not None:
            derivs = tuple(tuple(float(v) for v in dfn(t)) for t in nodes)
        else:
            eps = 1e-6 * max(1.0, t_end - t_start)
            derivs = tuple(
                tuple((a - b) / (2 * eps) for a, b in zip(fn(t + eps), fn(t - eps)))
                for t in nodes
            )
        return cls(nodes, values, derivs)

    @property
    def t_start(self) -> float:
        return self.nodes[0]

    @property
    def t_end(self) -> float:
        return self.nodes[-1]

    @property
    def dim(self) -> int:
        return len(self.values[0])

    def __call__(self, s: float) -> State:
        if not self.t_start <= s <= self.t_end:
            raise OutOfRange(f"t={s} outside history [{self.t_start}, {self.t_end}]")
        i = _locate(self.nodes, s)
        return _hermite(
            s, self.nodes[i], self.nodes[i + 1],
            self.values[i], self.values[i + 1],
            self.derivatives[i], self.derivatives[i + 1],
        )

    def derivative(self, s: float) -> State:
        i = _locate(self.nodes, s)
        return _hermite_deriv(
            s, self.nodes[i], self.nodes[i + 1],
            self.values[i], self.values[i + 1],
            self.derivatives[i], self.derivatives[i + 1],
        )


class Trajectory:
    """Integrator nodes ``(t, x, x')`` after the initial history, with dense output.

    Lookups before ``t0`` go to the initial history; lookups from ``t0`` on
    use the Hermite interpolant of the computed nodes.  ``advance`` continues
    the integration in place.
    """

    def __init__(
        self,
        func: Field,
        history: HistorySegment,
        h: float,
        min_delay: float,
        constant_delays: Sequence[float] = (),
        system: NicholsonSystem | None = None,
    ):
        if not h > 0:
            raise ValueError(f"step must be positive, got {h}")
        if not h < min_delay:
            raise ValueError(
                f"step h={h} must be smaller than the smallest delay {min_delay}"
            )
        self.func = func
        self.history = history
        self.h = float(h)
        self.min_delay = float(min_delay)
        self.system = system
        self.t0 = history.t_end
        self._delays = tuple(sorted({float(d) for d in constant_delays if d > 0}))
        self._breaks = self._breakpoints()
        x0 = tuple(history.values[-1])
        self.t: list[float] = [self.t0]
        self.x: list[State] = [x0]
        self.dx: list[State] = []
        self.dx.append(self._field(self.t0, x0))
        self._arrays = None

    def _breakpoints(self) -> list[float]:
        """Times ``t0 + sum k_j tau_j`` where the initial derivative jump propagates."""
        if not self._delays:
            return []
        out = set()
        for ks in product(range(BREAKPOINT_DEPTH + 1), repeat=len(self._delays)):
            if 0 < sum(ks) <= BREAKPOINT_DEPTH:
                out.add(self.t0 + sum(k * d for k, d in zip(ks, self._delays)))
        return sorted(out)

    # -- lookups -------------------------------------------------------

    @property
    def t_end(self) -> float:
        return self.t[-1]

    @property
    def dim(self) -> int:
        return len(self.x[0])

    def _past(self, s: float) -> State:
        """Causal lookup used by the field: ``s`` must precede the last completed node."""
        if s > self.t[-1] + 1e-12 * (1.0 + abs(s)):
            raise RuntimeError(f"acausal delayed lookup at t={s} beyond {self.t[-1]}")
        return self(s)

    def _field(self, t: float, x: State) -> State:
        return tuple(self.func(t, x, self._past))

    def __call__(self, s: float) -> State:
        if s < self.t0:
            return self.history(s)
        if s > self.t[-1]:
            raise OutOfRange(f"t={s} beyond trajectory end {self.t[-1]}")
        t = self.t
        if len(t) == 1:
            return self.x[0]
        i = _locate(t, s)
        return _hermite(s, t[i], t[i + 1], self.x[i], self.x[i + 1], self.dx[i], self.dx[i + 1])

    def derivative(self, s: float) -> State:
        if s < self.t0:
            if s < self.history.t_start:
                raise OutOfRange(f"t={s} before history start {self.history.t_start}")
            return self.history.derivative(s)
        if s > self.t[-1]:
            raise OutOfRange(f"t={s} beyond trajectory end {self.t[-1]}")
        t = self.t
        if len(t) == 1:
            return self.dx[0]
        i = _locate(t, s)
        return _hermite_deriv(s, t[i], t[i + 1], self.x[i], self.x[i + 1], self.dx[i], self.dx[i + 1])

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._arrays is None or len(self._arrays[0]) != len(self.t):
            self._arrays = (np.array(self.t), np.array(self.x), np.array(self.dx))
        return self._arrays

    def sample(self, ts) -> np.ndarray:
        """Vectorized Hermite values at ``ts`` (all at or after ``t0``), shape ``(len(ts), dim)``."""
        ts = np.asarray(ts, dtype=float)
        if ts.size == 0:
            return np.empty((0, self.dim))
        if ts.min() < self.t0 - 1e-12 or ts.max() > self.t[-1] + 1e-12 * (1 + abs(self.t[-1])):
            if ts.min() < self.t0:
                return np.array([self(s) for s in ts])
            raise OutOfRange(f"sample times exceed [{self.t0}, {self.t[-1]}]")
        t, x, dx = self.arrays()
        ts = np.clip(ts, t[0], t[-1])
        i = np.clip(np.searchsorted(t, ts, side="right") - 1, 0, len(t) - 2)
        t0, t1 = t[i], t[i + 1]
        h = (t1 - t0)[:, None]
        u = ((ts - t0) / (t1 - t0))[:, None]
        u2, u3 = u * u, u * u * u
        return (
            (2 * u3 - 3 * u2 + 1) * x[i]
            + h * (u3 - 2 * u2 + u) * dx[i]
            + (-2 * u3 + 3 * u2) * x[i + 1]
            + h * (u3 - u2) * dx[i + 1]
        )

    def segment(self, t_start: float, t_end: float | None = None) -> HistorySegment:
        """Node data covering ``[t_start, t_end]`` as initial history for a new run."""
        if t_end is None:
            t_end = self.t[-1]
        if t_start < self.t0 or t_end > self.t[-1]:
            raise OutOfRange(f"[{t_start}, {t_end}] not inside [{self.t0}, {self.t[-1]}]")
        i = max(bisect.bisect_right(self.t, t_start) - 1, 0)
        j = bisect.bisect_left(self.t, t_end - 1e-12 * (1 + abs(t_end)))
        j = min(j, len(self.t) - 1)
        return HistorySegment(
            tuple(self.t[i : j + 1]), tuple(self.x[i : j + 1]), tuple(self.dx[i : j + 1])
        )

    # -- stepping ------------------------------------------------------

    def advance(self, t_final: float) -> Trajectory:
        """Integrate forward to ``t_final`` with steps of at most ``h``.

        Steps are shortened to land on ``t_final`` and on the propagated
        breakpoints of constant delays, so derivative jumps never fall inside
        a step.
        """
        t_cur = self.t[-1]
        if t_final <= t_cur:
            return self
        targets = [b for b in self._breaks if t_cur < b < t_final] + [t_final]
        func, past = self.func, self._past
        x, k1 = self.x[-1], self.dx[-1]
        for target in targets:
            span = target - t_cur
            n = max(1, math.ceil(span / self.h - 1e-9))
            hh = span / n
            start = t_cur
            for i in range(1, n + 1):
                t_new = target if i == n else start + i * hh
                step = t_new - t_cur
                half = 0.5 * step
                tm = t_cur + half
                try:
                    k2 = func(tm, tuple(a + half * b for a, b in zip(x, k1)), past)
                    k3 = func(tm, tuple(a + half * b for a, b in zip(x, k2)), past)
                    k4 = func(t_new, tuple(a + step * b for a, b in zip(x, k3)), past)
                    x = tuple(
                        a + step / 6 * (p + 2 * q + 2 * r + s)
                        for a, p, q, r, s in zip(x, k1, k2, k3, k4)
                    )
                except OverflowError as exc:
                    raise NonFiniteState(f"overflow in step ending at t={t_new}") from exc
                if not all(math.isfinite(v) for v in x):
                    raise NonFiniteState(f"non-finite state {x} at t={t_new}")
                self.t.append(t_new)
                self.x.append(x)
                try:
                    k1 = tuple(func(t_new, x, past))
                except OverflowError as exc:
                    raise NonFiniteState(f"overflow at t={t_new}") from exc
                self.dx.append(k1)
                t_cur = t_new
        return self

    def to_csv(self, path, names: Sequence[str] | None = None) -> None:
        if names is None:
            names = [f"x{i + 1}" for i in range(self.dim)]
        with open(path, "w", newline="") as fh:
            write_csv(fh, self.t, self.x, names)


def write_csv(fh, times, states, names: Sequence[str]) -> None:
    w = csv.writer(fh)
    w.writerow(["t", *names])
    for t, x in zip(times, states):
        w.writerow([repr(float(t)), *(repr(float(v)) for v in x)])


def nicholson_field(sys: NicholsonSystem) -> Field:
    fast = sys.fast
    tau1, tau2 = fast.tau1, fast.tau2

    def func(t, x, past):
        d1 = [past(t - tau(t))[0] for tau in tau1]
        d2 = [past(t - tau(t))[1] for tau in tau2]
        return fast(t, x[0], x[1], d1, d2)

    return func


def integrate_field(
    func: Field,
    history: HistorySegment,
    t_final: float,
    h: float,
    min_delay: float,
    constant_delays: Sequence[float] = (),
) -> Trajectory:
    """Generic entry point for fields not built from a :class:`NicholsonSystem`."""
    if not t_final > history.t_end:
        raise ValueError("t_final must lie beyond the end of the history")
    return Trajectory(func, history, h, min_delay, constant_delays).advance(t_final)


def default_step(sys: NicholsonSystem) -> float:
    return sys.omega / DEFAULT_STEPS_PER_PERIOD


def integrate(
    sys: NicholsonSystem,
    history: HistorySegment,
    t_final: float,
    h: float | None = None,
) -> Trajectory:
    """Integrate the Nicholson system from ``history`` up to ``t_final``."""
    if h is None:
        h = default_step(sys)
    if history.t_end - history.t_start < sys.max_delay - 1e-12:
        raise ValueError(
            f"history spans {history.t_end - history.t_start}, less than max delay {sys.max_delay}"
        )
    if not t_final > history.t_end:
        raise ValueError("t_final must lie beyond the end of the history")
    constant = [bt.tau.offset for bt in sys.births1 + sys.births2 if bt.tau.is_constant]
    traj = Trajectory(
        nicholson_field(sys), history, h, sys.min_delay, constant, system=sys
    )
    return traj.advance(t_final)


def interpolate(traj: Trajectory, t: float) -> State:
    if t < traj.history.t_start or t > traj.t_end:
        raise OutOfRange(f"t={t} outside [{traj.history.t_start}, {traj.t_end}]")
    return traj(t)
