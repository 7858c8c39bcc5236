"""The two-patch Nicholson system with saturating mortality and its lambda-family."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .coeffs import PeriodicCoefficient


class PoleError(ArithmeticError):
    """A density reached the pole ``x = -c(t)`` of a mortality term."""


def birth_f(x):
    """Nicholson recruitment ``x * exp(-x)``; accepts scalars or arrays."""
    if isinstance(x, np.ndarray):
        return x * np.exp(-x)
    return x * math.exp(-x)


@dataclass(frozen=True)
class MortalityTerm:
    delta: PeriodicCoefficient
    c: PeriodicCoefficient

    def __post_init__(self):
        for name in ("delta", "c"):
            coef = getattr(self, name)
            if not coef.inf > 0:
                raise ValueError(f"mortality {name} must be strictly positive (inf={coef.inf})")


@dataclass(frozen=True)
class BirthTerm:
    b: PeriodicCoefficient
    tau: PeriodicCoefficient

    def __post_init__(self):
        if not self.b.inf > 0:
            raise ValueError(f"birth rate must be strictly positive (inf={self.b.inf})")
        if self.tau.inf < 0:
            raise ValueError(f"delay must be non-negative (inf={self.tau.inf})")
        if not self.tau.sup > 0:
            raise ValueError("delay must have a positive supremum")


def mortality(m: MortalityTerm, t: float, x: float) -> float:
    c = m.c.eval(t)
    if c + x <= 0:
        raise PoleError(f"c(t) + x = {c + x} <= 0 at t={t}")
    return m.delta.eval(t) * x / (c + x)


@dataclass(frozen=True)
class NicholsonSystem:
    """Patch ``i`` loses ``m_ii``, gains ``sum_j b_ij f(x_i(t - tau_ij))`` and ``m_ik``.

    One birth term per patch is the classical system; longer lists give the
    multi-delay variant.
    """

    m11: MortalityTerm
    m12: MortalityTerm
    m21: MortalityTerm
    m22: MortalityTerm
    births1: tuple[BirthTerm, ...]
    births2: tuple[BirthTerm, ...]
    omega: float

    def __post_init__(self):
        object.__setattr__(self, "births1", tuple(self.births1))
        object.__setattr__(self, "births2", tuple(self.births2))
        if not self.births1 or not self.births2:
            raise ValueError("each patch needs at least one birth term")
        for coef in self.coefficients():
            if not math.isclose(coef.period, self.omega, rel_tol=1e-12):
                raise ValueError(
                    f"coefficient period {coef.period} differs from system period {self.omega}"
                )

    def coefficients(self) -> list[PeriodicCoefficient]:
        out = []
        for m in (self.m11, self.m12, self.m21, self.m22):
            out += [m.delta, m.c]
        for bt in self.births1 + self.births2:
            out += [bt.b, bt.tau]
        return out

    @property
    def births(self) -> tuple[tuple[BirthTerm, ...], tuple[BirthTerm, ...]]:
        return self.births1, self.births2

    @property
    def max_delay(self) -> float:
        return max(bt.tau.sup for bt in self.births1 + self.births2)

    @property
    def min_delay(self) -> float:
        return min(bt.tau.inf for bt in self.births1 + self.births2)

    @property
    def n_births(self) -> tuple[int, int]:
        return len(self.births1), len(self.births2)

    @cached_property
    def fast(self) -> _FastField:
        return _FastField(self)


class _FastField:
    """Scalar closures over the coefficients for use in integrator hot loops."""

    def __init__(self, sys: NicholsonSystem):
        self.d11, self.c11 = sys.m11.delta.scalar_fn(), sys.m11.c.scalar_fn()
        self.d12, self.c12 = sys.m12.delta.scalar_fn(), sys.m12.c.scalar_fn()
        self.d21, self.c21 = sys.m21.delta.scalar_fn(), sys.m21.c.scalar_fn()
        self.d22, self.c22 = sys.m22.delta.scalar_fn(), sys.m22.c.scalar_fn()
        self.b1 = [bt.b.scalar_fn() for bt in sys.births1]
        self.b2 = [bt.b.scalar_fn() for bt in sys.births2]
        self.tau1 = [bt.tau.scalar_fn() for bt in sys.births1]
        self.tau2 = [bt.tau.scalar_fn() for bt in sys.births2]

    def delays(self, t: float) -> tuple[list[float], list[float]]:
        return [tau(t) for tau in self.tau1], [tau(t) for tau in self.tau2]

    def __call__(self, t, x1, x2, delayed1, delayed2, lam=1.0):
        c11, c12, c21, c22 = self.c11(t), self.c12(t), self.c21(t), self.c22(t)
        if c11 + x1 <= 0 or c21 + x1 <= 0 or c12 + x2 <= 0 or c22 + x2 <= 0:
            raise PoleError(f"state ({x1}, {x2}) hit a mortality pole at t={t}")
        exp = math.exp
        birth1 = 0.0
        for b, u in zip(self.b1, delayed1):
            birth1 += b(t) * u * exp(-u)
        birth2 = 0.0
        for b, u in zip(self.b2, delayed2):
            birth2 += b(t) * u * exp(-u)
        r1 = -self.d11(t) * x1 / (c11 + x1) + birth1 + self.d12(t) * x2 / (c12 + x2)
        r2 = -self.d22(t) * x2 / (c22 + x2) + birth2 + self.d21(t) * x1 / (c21 + x1)
        if lam != 1.0:
            return lam * r1, lam * r2
        return r1, r2


def rhs(
    sys: NicholsonSystem,
    t: float,
    x_now: Sequence[float],
    x_delayed: Sequence[Sequence[float]],
    lam: float = 1.0,
) -> tuple[float, float]:
    """Vector field of the lambda-family; ``lam = 1`` is the target system.

    ``x_delayed[i][j]`` is patch ``i``'s density at ``t - tau_ij(t)``.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    d1, d2 = x_delayed
    if len(d1) != len(sys.births1) or len(d2) != len(sys.births2):
        raise ValueError("x_delayed needs one value per birth term of each patch")
    x1, x2 = x_now
    births = []
    for terms, delayed in ((sys.births1, d1), (sys.births2, d2)):
        total = 0.0
        for bt, u in zip(terms, delayed):
            total += bt.b.eval(t) * birth_f(u)
        births.append(total)
    r1 = -mortality(sys.m11, t, x1) + births[0] + mortality(sys.m12, t, x2)
    r2 = -mortality(sys.m22, t, x2) + births[1] + mortality(sys.m21, t, x1)
    return lam * r1, lam * r2


Sampler = Callable[[float], float]


def phi(
    sys: NicholsonSystem, X: tuple[Sampler, Sampler]
) -> tuple[Sampler, Sampler]:
    """The operator whose period average defines the averaged map.

    Delayed arguments are read from ``X`` itself, which is assumed
    ``omega``-periodic.
    """
    x1, x2 = X

    def components(t):
        d1 = [x1(t - bt.tau.eval(t)) for bt in sys.births1]
        d2 = [x2(t - bt.tau.eval(t)) for bt in sys.births2]
        return rhs(sys, t, (x1(t), x2(t)), (d1, d2))

    return (lambda t: components(t)[0]), (lambda t: components(t)[1])
