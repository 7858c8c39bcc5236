"""Periodic coefficient functions given as an offset plus a finite harmonic series."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

DEFAULT_QUAD_N = 256
SCAN_POINTS = 4096
REFINE_TOL = 1e-12

WAVEFORMS = ("sin", "cos")


def default_quadrature_n() -> int:
    """Quadrature sample count per period, overridable with ``NICHOLSON_QUAD_N``."""
    raw = os.environ.get("NICHOLSON_QUAD_N")
    if raw is None or raw == "":
        return DEFAULT_QUAD_N
    n = int(raw)
    if n < 8:
        raise ValueError(f"NICHOLSON_QUAD_N must be >= 8, got {n}")
    return n


@dataclass(frozen=True)
class Harmonic:
    amp: float
    k: int = 1
    phase: float = 0.0
    waveform: str = "sin"

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}, got {self.waveform!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"harmonic multiple k must be a positive integer, got {self.k}")


@dataclass(frozen=True)
class Extrema:
    inf: float
    sup: float
    arg_inf: float
    arg_sup: float


@dataclass(frozen=True)
class PeriodicCoefficient:
    """``offset + sum(amp * waveform(2*pi*k*t/period + phase))``.

    Instances are immutable; extrema are computed once and cached.
    """

    offset: float
    harmonics: tuple[Harmonic, ...] = ()
    period: float = 2 * math.pi

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "harmonics", tuple(self.harmonics))

    @classmethod
    def constant(cls, value: float, period: float = 2 * math.pi) -> PeriodicCoefficient:
        return cls(float(value), (), period)

    @property
    def is_constant(self) -> bool:
        return all(h.amp == 0 for h in self.harmonics)

    def eval(self, t: float) -> float:
        w = 2 * math.pi / self.period
        total = self.offset
        for h in self.harmonics:
            arg = w * h.k * t + h.phase
            total += h.amp * (math.sin(arg) if h.waveform == "sin" else math.cos(arg))
        return total

    def __call__(self, t):
        """Vectorized evaluation over an array of times."""
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi / self.period
        out = np.full(t.shape, self.offset, dtype=float)
        for h in self.harmonics:
            arg = w * h.k * t + h.phase
            out += h.amp * (np.sin(arg) if h.waveform == "sin" else np.cos(arg))
        return out

    def scalar_fn(self) -> Callable[[float], float]:
        """A fast closure for scalar evaluation inside integrator loops."""
        if self.is_constant:
            c = float(self.offset)
            return lambda t: c
        w = 2 * math.pi / self.period
        terms = [
            (h.amp, w * h.k, h.phase, math.sin if h.waveform == "sin" else math.cos)
            for h in self.harmonics
            if h.amp != 0
        ]
        offset = self.offset
        if len(terms) == 1:
            a, wk, ph, fn = terms[0]
            return lambda t: offset + a * fn(wk * t + ph)
        return lambda t: offset + sum(a * fn(wk * t + ph) for a, wk, ph, fn in terms)

    def scaled(self, s: float) -> PeriodicCoefficient:
        harmonics = tuple(
            Harmonic(h.amp * s, h.k, h.phase, h.waveform) for h in self.harmonics
        )
        return PeriodicCoefficient(self.offset * s, harmonics, self.period)

    def mean(self) -> float:
        return self.offset

    @cached_property
    def extrema(self) -> Extrema:
        return extrema(self)

    @property
    def sup(self) -> float:
        return self.extrema.sup

    @property
    def inf(self) -> float:
        return self.extrema.inf


def _single_harmonic_extrema(coef: PeriodicCoefficient, h: Harmonic) -> Extrema:
    a = abs(h.amp)
    # waveform argument at which the raw waveform peaks
    peak = math.pi / 2 if h.waveform == "sin" else 0.0
    if h.amp < 0:
        peak += math.pi
    trough = peak + math.pi
    scale = coef.period / (2 * math.pi * h.k)
    sub = coef.period / h.k

    def to_time(theta):
        return ((theta - h.phase) * scale) % sub

    return Extrema(
        inf=coef.offset - a,
        sup=coef.offset + a,
        arg_inf=to_time(trough),
        arg_sup=to_time(peak),
    )


def _refine(fn: Callable[[float], float], t0: float, dt: float) -> tuple[float, float]:
    res = minimize_scalar(
        fn, bounds=(t0 - dt, t0 + dt), method="bounded", options={"xatol": REFINE_TOL}
    )
    return float(res.x), float(res.fun)


def extrema(coef: PeriodicCoefficient) -> Extrema:
    """Exact extrema for at most one harmonic, otherwise scan plus local refinement."""
    active = [h for h in coef.harmonics if h.amp != 0]
    if not active:
        return Extrema(coef.offset, coef.offset, 0.0, 0.0)
    if len(active) == 1:
        return _single_harmonic_extrema(coef, active[0])

    omega = coef.period
    t = np.linspace(0.0, omega, SCAN_POINTS, endpoint=False)
    v = coef(t)
    dt = omega / SCAN_POINTS
    i_lo, i_hi = int(np.argmin(v)), int(np.argmax(v))

    t_lo, v_lo = _refine(coef.eval, t[i_lo], dt)
    t_hi, neg_hi = _refine(lambda s: -coef.eval(s), t[i_hi], dt)
    v_hi = -neg_hi
    # never report an extremum worse than a scanned sample
    if v_lo > v[i_lo]:
        t_lo, v_lo = float(t[i_lo]), float(v[i_lo])
    if v_hi < v[i_hi]:
        t_hi, v_hi = float(t[i_hi]), float(v[i_hi])
    return Extrema(inf=v_lo, sup=v_hi, arg_inf=t_lo % omega, arg_sup=t_hi % omega)


def period_integral(
    f: Callable[[np.ndarray], np.ndarray] | PeriodicCoefficient,
    omega: float,
    n: int | None = None,
) -> float | np.ndarray:
    """Composite trapezoidal integral of an ``omega``-periodic sampler over one period.

    ``f`` is called once with the array of ``n`` sample times and may return
    an array whose last axis runs over those times; the integral is taken
    along that axis.
    """
    if n is None:
        n = default_quadrature_n()
    if n < 8:
        raise ValueError(f"need at least 8 quadrature samples, got {n}")
    t = np.arange(n) * (omega / n)
    vals = np.asarray(f(t), dtype=float)
    if vals.shape == ():
        vals = np.full(n, float(vals))
    total = vals.sum(axis=-1) * (omega / n)
    return float(total) if np.ndim(total) == 0 else total


def coefficient_from_dict(d: dict | float | int, period: float) -> PeriodicCoefficient:
    """Build from ``{offset, harmonics: [{amp, k, phase, waveform}]}`` or a bare number."""
    if isinstance(d, (int, float)):
        return PeriodicCoefficient.constant(float(d), period)
    harmonics = tuple(
        Harmonic(
            amp=float(h["amp"]),
            k=int(h.get("k", 1)),
            phase=float(h.get("phase", 0.0)),
            waveform=str(h.get("waveform", "sin")),
        )
        for h in d.get("harmonics", ()) or ()
    )
    return PeriodicCoefficient(float(d.get("offset", 0.0)), harmonics, period)


def coefficient_to_dict(coef: PeriodicCoefficient) -> dict:
    return {
        "offset": coef.offset,
        "harmonics": [
            {"amp": h.amp, "k": h.k, "phase": h.phase, "waveform": h.waveform}
            for h in coef.harmonics
        ],
    }


def harmonic_series(
    offset: float,
    terms: Sequence[tuple[float, int, str]] = (),
    period: float = 2 * math.pi,
) -> PeriodicCoefficient:
    """Shorthand: ``harmonic_series(5, [(0.25, 1, "sin")])`` is ``5 + 0.25 sin t``."""
    return PeriodicCoefficient(
        offset, tuple(Harmonic(a, k, 0.0, w) for a, k, w in terms), period
    )
