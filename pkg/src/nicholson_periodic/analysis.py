"""Sufficient conditions for periodic solutions, and the competing integral conditions.

Every condition is a strict inequality ``lhs < rhs`` reported with its margin
``rhs - lhs``.  Margins closer to zero than ``MARGINAL_TOL`` are flagged so
that bound construction can refuse them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .coeffs import period_integral
from .model import NicholsonSystem

MARGINAL_TOL = 1e-9


class EmptyInterval(ValueError):
    """No value of the scalar parameter satisfies all hypotheses."""


@dataclass(frozen=True)
class ConditionResult:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin > 0

    @property
    def marginal(self) -> bool:
        return abs(self.margin) < MARGINAL_TOL

    def as_record(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "marginal": self.marginal,
        }


@dataclass(frozen=True)
class HypothesisReport:
    h1: ConditionResult
    h2: ConditionResult
    h3: ConditionResult
    h4: ConditionResult

    @property
    def conditions(self) -> tuple[ConditionResult, ...]:
        return (self.h1, self.h2, self.h3, self.h4)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions)


@dataclass(frozen=True)
class ChenWangReport:
    A1: float
    A2: float
    B1: float
    B2: float
    C1: float
    C2: float
    D1: float
    D2: float
    smallness1: ConditionResult
    smallness2: ConditionResult
    c_vs_d_1: ConditionResult
    c_vs_d_2: ConditionResult
    log_1: ConditionResult
    log_2: ConditionResult

    @property
    def conditions(self) -> tuple[ConditionResult, ...]:
        return (
            self.smallness1,
            self.smallness2,
            self.c_vs_d_1,
            self.c_vs_d_2,
            self.log_1,
            self.log_2,
        )

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions)

    def integrals(self) -> dict[str, float]:
        d = asdict(self)
        return {k: d[k] for k in ("A1", "A2", "B1", "B2", "C1", "C2", "D1", "D2")}


def _birth_sums(births) -> tuple[float, float]:
    return sum(bt.b.sup for bt in births), sum(bt.b.inf for bt in births)


def check_hypotheses(sys: NicholsonSystem) -> HypothesisReport:
    """Evaluate the four extrema inequalities.

    With several birth terms per patch, ``b+`` and ``b-`` are replaced by the
    sums of the individual extrema.
    """
    b1_sup, b1_inf = _birth_sums(sys.births1)
    b2_sup, b2_inf = _birth_sums(sys.births2)
    m11, m12, m21, m22 = sys.m11, sys.m12, sys.m21, sys.m22
    e = math.e

    h1 = ConditionResult("H1", b1_sup / e + m12.delta.sup, m11.delta.inf)
    h2 = ConditionResult("H2", b2_sup / e + m21.delta.sup, m22.delta.inf)
    h3 = ConditionResult(
        "H3", m11.delta.sup / m11.c.inf - m12.delta.inf / m12.c.sup, b1_inf
    )
    h4 = ConditionResult(
        "H4", m22.delta.sup / m22.c.inf - m21.delta.inf / m21.c.sup, b2_inf
    )
    return HypothesisReport(h1, h2, h3, h4)


def check_chen_wang(sys: NicholsonSystem, n: int | None = None) -> ChenWangReport:
    """Integral conditions of the earlier existence theorem (single delay per patch)."""
    if sys.n_births != (1, 1):
        raise ValueError("Chen-Wang conditions are defined for one birth term per patch")
    w = sys.omega
    m11, m12, m21, m22 = sys.m11, sys.m12, sys.m21, sys.m22
    b1, b2 = sys.births1[0].b, sys.births2[0].b

    A1 = 2 * period_integral(lambda t: m11.delta(t) / m11.c(t), w, n)
    A2 = 2 * period_integral(lambda t: m22.delta(t) / m22.c(t), w, n)
    B1 = period_integral(b1, w, n)
    B2 = period_integral(b2, w, n)
    C1 = period_integral(m11.delta, w, n)
    C2 = period_integral(m22.delta, w, n)
    D1 = period_integral(m12.delta, w, n)
    D2 = period_integral(m21.delta, w, n)

    e = math.e
    small1 = ConditionResult(
        "CW-small-1",
        b1.sup / (m11.delta.inf * e) + m12.delta.sup / m11.delta.inf,
        1.0,
    )
    small2 = ConditionResult(
        "CW-small-2",
        b2.sup / (m22.delta.inf * e) + m21.delta.sup / m22.delta.inf,
        1.0,
    )
    cd1 = ConditionResult("CW-C>2D-1", 2 * D1, C1)
    cd2 = ConditionResult("CW-C>2D-2", 2 * D2, C2)
    log1 = ConditionResult("CW-log-1", A1, math.log(2 * B1 / A1))
    log2 = ConditionResult("CW-log-2", A2, math.log(2 * B2 / A2))
    return ChenWangReport(
        A1, A2, B1, B2, C1, C2, D1, D2, small1, small2, cd1, cd2, log1, log2
    )


def admissible_parameter_interval(
    template: Callable[[float], NicholsonSystem],
) -> tuple[float, float]:
    """Open interval of ``s > 0`` for which ``check_hypotheses(template(s))`` passes.

    ``template(s)`` must scale a single birth-coefficient family by ``s``;
    every margin is then affine in ``s`` and each condition cuts out a
    half-line.  Conditions not depending on ``s`` either admit every ``s``
    or none.
    """
    m1 = np.array([c.margin for c in check_hypotheses(template(1.0)).conditions])
    m2 = np.array([c.margin for c in check_hypotheses(template(2.0)).conditions])
    slope = m2 - m1
    intercept = m1 - slope
    m3 = np.array([c.margin for c in check_hypotheses(template(3.0)).conditions])
    scale = np.maximum(1.0, np.abs(m3))
    if np.any(np.abs(intercept + 3 * slope - m3) > 1e-9 * scale):
        raise ValueError("hypothesis margins are not affine in the parameter")

    lo, hi = 0.0, math.inf
    names = ("H1", "H2", "H3", "H4")
    for name, a, b in zip(names, intercept, slope):
        if abs(b) <= 1e-14 * max(1.0, abs(a)):
            if a <= 0:
                raise EmptyInterval(f"{name} fails for every value of the parameter")
            continue
        root = -a / b
        if b > 0:
            lo = max(lo, root)
        else:
            hi = min(hi, root)
    if not lo < hi:
        raise EmptyInterval(f"constraints are inconsistent: need {lo} < s < {hi}")
    return float(lo), float(hi)
