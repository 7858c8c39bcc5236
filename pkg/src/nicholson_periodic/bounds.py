"""Constructive a priori bounds confining periodic solutions to a square ``(eps0, r0)^2``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import MARGINAL_TOL, check_hypotheses
from .coeffs import Extrema
from .model import NicholsonSystem

MARGIN_UP = 1e-3
SAFETY = 0.5
SCAN_POINTS = 10_000
BISECT_TOL = 1e-12


class HypothesisViolated(ValueError):
    """A hypothesis needed for a finite bound fails (or holds only marginally)."""


class BoundsUnderflow(ArithmeticError):
    """The lower bound is too small to represent as a positive double."""


@dataclass(frozen=True)
class Rectangle:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"rectangle needs 0 < lo < hi, got ({self.lo}, {self.hi})")

    def contains(self, x1: float, x2: float) -> bool:
        return self.lo < x1 < self.hi and self.lo < x2 < self.hi


@dataclass(frozen=True)
class BoundsReport:
    r0_patch1: float
    r0_patch2: float
    r0: float
    r1: float
    eps_star_patch1: float
    eps_star_patch2: float
    eps0: float
    rect: Rectangle

    def as_record(self) -> dict:
        return {
            "r0_patch1": self.r0_patch1,
            "r0_patch2": self.r0_patch2,
            "r0": self.r0,
            "r1": self.r1,
            "eps_star_patch1": self.eps_star_patch1,
            "eps_star_patch2": self.eps_star_patch2,
            "eps0": self.eps0,
            "rect_lo": self.rect.lo,
            "rect_hi": self.rect.hi,
        }


def upper_threshold(delta_ii: Extrema, c_ii: Extrema, b_sum_sup: float, delta_ij_sup: float) -> float:
    """Root of ``delta_ii- R / (c_ii+ + R) = b+/e + delta_ij+``.

    Any periodic solution's maximum on this patch lies below every larger R.
    """
    k = b_sum_sup / math.e + delta_ij_sup
    gap = delta_ii.inf - k
    if gap <= 0 or gap < MARGINAL_TOL:
        raise HypothesisViolated(
            f"b+/e + delta_ij+ = {k} is not below delta_ii- = {delta_ii.inf}"
        )
    return c_ii.sup * k / gap


def _bisect(fn, lo: float, hi: float, tol: float = BISECT_TOL, max_iter: int = 400) -> float:
    """Sign-change bisection; ``fn(lo)`` and ``fn(hi)`` must have opposite signs."""
    f_lo = fn(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        f_mid = fn(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjugate_r1(r0: float) -> float:
    """The level ``r1`` in (0, 1] with ``f(r1) = f(r0)`` for ``f(x) = x e^-x``.

    Solved in log space, ``y - e^y = log r0 - r0`` with ``r1 = e^y``, so that
    large ``r0`` does not underflow the bracket.
    """
    if r0 < 1:
        raise ValueError(f"r0 must be >= 1, got {r0}")
    if r0 == 1:
        return 1.0
    # r1 ~ r0 e^-r0 is subnormal or zero beyond r0 ~ 745
    level = math.log(r0) - r0
    lo, hi = level, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if mid - math.exp(mid) < level:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def lower_threshold(
    delta_ii: Extrema,
    c_ii: Extrema,
    delta_ij: Extrema,
    c_ij: Extrema,
    b_inf: float,
    r1: float,
) -> float:
    """First ``eps`` in (0, r1] where ``delta_ii+/(c_ii- + eps) - delta_ij-/(c_ij+ + eps)`` reaches ``b- e^-eps``.

    Returns ``r1`` if the two sides never cross on (0, r1].
    """
    def gap(eps):
        lhs = delta_ii.sup / (c_ii.inf + eps) - delta_ij.inf / (c_ij.sup + eps)
        return lhs - b_inf * np.exp(-eps)

    g0 = float(gap(0.0))
    if g0 >= 0 or abs(g0) < MARGINAL_TOL:
        raise HypothesisViolated(
            f"the lower-bound inequality already fails at eps=0 (gap {g0})"
        )
    grid = np.linspace(0.0, r1, SCAN_POINTS + 1)[1:]
    values = gap(grid)
    crossing = np.flatnonzero(values >= 0)
    if crossing.size == 0:
        return float(r1)
    i = int(crossing[0])
    left = 0.0 if i == 0 else float(grid[i - 1])
    return _bisect(lambda e: float(gap(e)), left, float(grid[i]))


def patch_thresholds(sys: NicholsonSystem, r1: float | None = None) -> dict[str, float]:
    """Per-patch upper thresholds and (given ``r1``) lower crossing points."""
    b1 = sum(bt.b.sup for bt in sys.births1), sum(bt.b.inf for bt in sys.births1)
    b2 = sum(bt.b.sup for bt in sys.births2), sum(bt.b.inf for bt in sys.births2)
    m11, m12, m21, m22 = sys.m11, sys.m12, sys.m21, sys.m22
    out = {
        "r0_patch1": upper_threshold(m11.delta.extrema, m11.c.extrema, b1[0], m12.delta.sup),
        "r0_patch2": upper_threshold(m22.delta.extrema, m22.c.extrema, b2[0], m21.delta.sup),
    }
    if r1 is not None:
        out["eps_star_patch1"] = lower_threshold(
            m11.delta.extrema, m11.c.extrema, m12.delta.extrema, m12.c.extrema, b1[1], r1
        )
        out["eps_star_patch2"] = lower_threshold(
            m22.delta.extrema, m22.c.extrema, m21.delta.extrema, m21.c.extrema, b2[1], r1
        )
    return out


def build_rectangle(
    sys: NicholsonSystem, margin_up: float = MARGIN_UP, safety: float = SAFETY
) -> BoundsReport:
    report = check_hypotheses(sys)
    failed = [c.name for c in report.conditions if not c.passed or c.marginal]
    if failed:
        raise HypothesisViolated(f"hypotheses not strictly satisfied: {', '.join(failed)}")

    upper = patch_thresholds(sys)
    r0 = max(1.0, upper["r0_patch1"], upper["r0_patch2"]) * (1 + margin_up)
    r1 = conjugate_r1(r0)
    th = patch_thresholds(sys, r1)
    eps0 = safety * min(th["eps_star_patch1"], th["eps_star_patch2"], r1)
    if not eps0 > 0:
        raise BoundsUnderflow(f"r0 = {r0:.6g} gives a lower bound below the double range")
    return BoundsReport(
        r0_patch1=th["r0_patch1"],
        r0_patch2=th["r0_patch2"],
        r0=r0,
        r1=r1,
        eps_star_patch1=th["eps_star_patch1"],
        eps_star_patch2=th["eps_star_patch2"],
        eps0=eps0,
        rect=Rectangle(eps0, r0),
    )
