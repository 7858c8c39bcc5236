"""Averaged planar map, Poincare-Miranda certificates and Brouwer degree by winding.

Planar maps are callables ``F(x1, x2) -> (y1, y2)`` that broadcast over
numpy arrays.  :class:`AveragedMap` is one such map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import Rectangle
from .coeffs import default_quadrature_n, period_integral
from .model import NicholsonSystem, PoleError, birth_f

PlanarMap = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

ZERO_TOL = 1e-12
MAX_SEGMENTS = 2**20
DEFAULT_EDGE_SAMPLES = 256
ROOT_TOL = 1e-10


class ZeroOnBoundary(ArithmeticError):
    pass


class RefinementExceeded(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    pass


class AveragedMap:
    """Period average of the field at constant states, sign-flipped.

    ``g_i(x) = mean_t[ delta_ii x_i/(c_ii + x_i) - sum_j b_ij f(x_i) - delta_ik x_k/(c_ik + x_k) ]``.
    At a constant state every delayed argument equals the state itself.
    """

    def __init__(self, sys: NicholsonSystem, n: int | None = None):
        self.sys = sys
        self.n = default_quadrature_n() if n is None else int(n)
        if self.n < 8:
            raise ValueError(f"need at least 8 quadrature samples, got {self.n}")
        self.omega = sys.omega
        t = np.arange(self.n) * (self.omega / self.n)
        self._t = t
        self._coef = {
            name: (m.delta(t), m.c(t))
            for name, m in (("11", sys.m11), ("12", sys.m12), ("21", sys.m21), ("22", sys.m22))
        }
        self._c_inf = {
            name: m.c.inf
            for name, m in (("11", sys.m11), ("12", sys.m12), ("21", sys.m21), ("22", sys.m22))
        }
        # means of the birth coefficients, through the same quadrature
        self.b_mean1 = sum(period_integral(bt.b, self.omega, self.n) for bt in sys.births1) / self.omega
        self.b_mean2 = sum(period_integral(bt.b, self.omega, self.n) for bt in sys.births2) / self.omega

    def _saturation_mean(self, name: str, x: np.ndarray) -> np.ndarray:
        """``(1/omega) * int delta(t) x / (c(t) + x) dt`` for each entry of ``x``."""
        if np.any(x <= -self._c_inf[name]):
            raise PoleError(f"state reaches the pole of mortality term m{name}")
        delta, c = self._coef[name]
        xs = x[..., None]

        def integrand(_t):
            return delta * xs / (c + xs)

        return period_integral(integrand, self.omega, self.n) / self.omega

    def __call__(self, x1, x2):
        a1 = np.asarray(x1, dtype=float)
        a2 = np.asarray(x2, dtype=float)
        a1, a2 = np.broadcast_arrays(a1, a2)
        g1 = (
            self._saturation_mean("11", a1)
            - self.b_mean1 * birth_f(a1)
            - self._saturation_mean("12", a2)
        )
        g2 = (
            self._saturation_mean("22", a2)
            - self.b_mean2 * birth_f(a2)
            - self._saturation_mean("21", a1)
        )
        if np.ndim(g1) == 0:
            return float(g1), float(g2)
        return g1, g2

    def normalized(self, x1, x2):
        """``(g1/x1, g2/x2)``: a positive diagonal rescaling of ``g`` for ``x > 0``.

        The straight-line homotopy between ``g`` and this map never vanishes
        where ``g`` does not, so both have the same degree on any rectangle in
        the open positive quadrant.  Its values stay O(1) near the axes, where
        ``g`` itself is O(x).
        """
        g1, g2 = self(x1, x2)
        return np.asarray(g1) / np.asarray(x1), np.asarray(g2) / np.asarray(x2)


def eval_g(gmap: AveragedMap, x: tuple[float, float]) -> tuple[float, float]:
    g1, g2 = gmap(float(x[0]), float(x[1]))
    return float(g1), float(g2)


@dataclass(frozen=True)
class MirandaCertificate:
    rect: Rectangle | tuple[float, float, float, float]
    samples_per_edge: int
    min_abs_value_on_edges: float
    pattern_holds: bool
    failed_edges: tuple[str, ...] = ()

    def as_record(self) -> dict:
        a1, b1, a2, b2 = _box(self.rect)
        return {
            "box": [a1, b1, a2, b2],
            "samples_per_edge": self.samples_per_edge,
            "min_abs_value_on_edges": self.min_abs_value_on_edges,
            "pattern_holds": self.pattern_holds,
            "failed_edges": list(self.failed_edges),
        }


def _edge_points(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def miranda_check(
    F: PlanarMap,
    rect: Rectangle | tuple[float, float, float, float],
    samples_per_edge: int = DEFAULT_EDGE_SAMPLES,
) -> MirandaCertificate:
    """Sample the four strict sign conditions on the edges of ``rect``.

    ``F1 < 0`` on the left edge, ``F1 > 0`` on the right, ``F2 < 0`` on the
    bottom and ``F2 > 0`` on the top.  ``rect`` may also be a general box
    ``(a1, b1, a2, b2)``.
    """
    if samples_per_edge < 16:
        raise ValueError("samples_per_edge must be at least 16")
    a1, b1, a2, b2 = _box(rect)
    s1 = _edge_points(a1, b1, samples_per_edge)
    s2 = _edge_points(a2, b2, samples_per_edge)

    left = np.asarray(F(np.full_like(s2, a1), s2)[0])
    right = np.asarray(F(np.full_like(s2, b1), s2)[0])
    bottom = np.asarray(F(s1, np.full_like(s1, a2))[1])
    top = np.asarray(F(s1, np.full_like(s1, b2))[1])

    checks = {
        "left": np.all(left < 0),
        "right": np.all(right > 0),
        "bottom": np.all(bottom < 0),
        "top": np.all(top > 0),
    }
    failed = tuple(name for name, ok in checks.items() if not ok)
    min_abs = float(
        min(np.min(np.abs(v)) for v in (left, right, bottom, top))
    )
    return MirandaCertificate(
        rect=rect,
        samples_per_edge=samples_per_edge,
        min_abs_value_on_edges=min_abs,
        pattern_holds=not failed,
        failed_edges=failed,
    )


def _box(rect) -> tuple[float, float, float, float]:
    if isinstance(rect, Rectangle):
        return rect.lo, rect.hi, rect.lo, rect.hi
    a1, b1, a2, b2 = (float(v) for v in rect)
    if not (a1 < b1 and a2 < b2):
        raise ValueError(f"degenerate box {rect}")
    return a1, b1, a2, b2


def _boundary_params(a1, b1, a2, b2, n):
    """Counter-clockwise boundary as a function of ``s`` in [0, 4)."""

    def point(s):
        s = np.asarray(s, dtype=float)
        edge = np.minimum(np.floor(s).astype(int), 3)
        u = s - edge
        x = np.select(
            [edge == 0, edge == 1, edge == 2, edge == 3],
            [a1 + u * (b1 - a1), np.full_like(u, b1), b1 - u * (b1 - a1), np.full_like(u, a1)],
        )
        y = np.select(
            [edge == 0, edge == 1, edge == 2, edge == 3],
            [np.full_like(u, a2), a2 + u * (b2 - a2), np.full_like(u, b2), b2 - u * (b2 - a2)],
        )
        return x, y

    return point, np.arange(4 * n + 1) / n


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + np.pi) % (2 * np.pi) - np.pi


def brouwer_degree(
    F: PlanarMap,
    rect: Rectangle | tuple[float, float, float, float],
    boundary_samples: int = DEFAULT_EDGE_SAMPLES,
    zero_tol: float = ZERO_TOL,
    max_segments: int = MAX_SEGMENTS,
) -> int:
    """Degree of ``F`` at 0 on ``rect`` as the winding number of the boundary image.

    Segments whose image turns by pi/2 or more are bisected until every
    angular step is below pi/2, so the accumulated angle is unambiguous.
    """
    a1, b1, a2, b2 = _box(rect)
    point, s = _boundary_params(a1, b1, a2, b2, boundary_samples)
    s = s[:-1]

    def angles(ss):
        x, y = point(ss)
        f1, f2 = F(x, y)
        f1 = np.broadcast_to(np.asarray(f1, dtype=float), np.shape(ss))
        f2 = np.broadcast_to(np.asarray(f2, dtype=float), np.shape(ss))
        norm = np.hypot(f1, f2)
        if not np.all(np.isfinite(norm)):
            raise ZeroOnBoundary("map is not finite on the boundary")
        if np.any(norm < zero_tol):
            i = int(np.argmin(norm))
            raise ZeroOnBoundary(
                f"|F| = {norm[i]:.3e} < {zero_tol} at boundary point ({x.flat[i]}, {y.flat[i]})"
            )
        return np.arctan2(f2, f1)

    theta = angles(s)
    while True:
        nxt = np.roll(theta, -1)
        d = _wrap(nxt - theta)
        bad = np.abs(d) >= np.pi / 2
        if not np.any(bad):
            break
        if s.size + int(bad.sum()) > max_segments:
            raise RefinementExceeded(
                f"boundary refinement needs more than {max_segments} segments"
            )
        s_next = np.roll(s, -1)
        s_next[-1] = 4.0
        mid = 0.5 * (s[bad] + s_next[bad])
        theta_mid = angles(mid)
        order = np.argsort(np.concatenate([s, mid]), kind="stable")
        s = np.concatenate([s, mid])[order]
        theta = np.concatenate([theta, theta_mid])[order]

    total = float(np.sum(_wrap(np.roll(theta, -1) - theta)))
    return int(round(total / (2 * math.pi)))


def _fd_jacobian(F, x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    J = np.empty((2, 2))
    for j in range(2):
        step = 1e-7 * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += step
        J[:, j] = (np.asarray(F(xp[0], xp[1]), dtype=float) - fx) / step
    return J


def _newton_polish(F, x0, box, tol, max_iter=50):
    a1, b1, a2, b2 = box
    x = np.array(x0, dtype=float)
    fx = np.asarray(F(x[0], x[1]), dtype=float)
    for _ in range(max_iter):
        if np.max(np.abs(fx)) < tol:
            return x, fx
        J = _fd_jacobian(F, x, fx)
        try:
            dx = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        norm0 = np.max(np.abs(fx))
        while lam > 1e-6:
            xn = x + lam * dx
            if a1 < xn[0] < b1 and a2 < xn[1] < b2:
                fn = np.asarray(F(xn[0], xn[1]), dtype=float)
                if np.max(np.abs(fn)) < norm0:
                    x, fx = xn, fn
                    break
            lam *= 0.5
        else:
            break
    return x, fx


def find_root_g(
    F: PlanarMap | AveragedMap,
    rect: Rectangle | tuple[float, float, float, float],
    tol: float = ROOT_TOL,
    min_width: float = 1e-7,
    max_levels: int = 200,
) -> tuple[float, float]:
    """Zero of ``F`` inside ``rect`` by degree-preserving bisection, then damped Newton.

    Each level splits the current box into four and keeps a child with
    nonzero degree; degree additivity guarantees one exists.  For an
    :class:`AveragedMap` the degrees are taken of its normalized form, which
    stays well scaled near the axes.
    """
    box = _box(rect)
    degree_map = F.normalized if isinstance(F, AveragedMap) else F
    if brouwer_degree(degree_map, box, boundary_samples=32) == 0:
        raise NoConvergence("degree of the map on the rectangle is zero")

    a1, b1, a2, b2 = box
    for _ in range(max_levels):
        if max(b1 - a1, b2 - a2) <= min_width * max(1.0, abs(b1), abs(b2)):
            break
        chosen = None
        for frac in (0.5, 0.4937, 0.5179):
            m1 = a1 + frac * (b1 - a1)
            m2 = a2 + frac * (b2 - a2)
            children = [(a1, m1, a2, m2), (m1, b1, a2, m2), (a1, m1, m2, b2), (m1, b1, m2, b2)]
            try:
                for child in children:
                    if brouwer_degree(degree_map, child, boundary_samples=16) != 0:
                        chosen = child
                        break
            except ZeroOnBoundary:
                chosen = None
                continue
            if chosen is not None:
                break
        if chosen is None:
            break
        a1, b1, a2, b2 = chosen

    x0 = (0.5 * (a1 + b1), 0.5 * (a2 + b2))
    x, fx = _newton_polish(F, x0, box, tol)
    if not np.max(np.abs(fx)) < tol:
        raise NoConvergence(f"residual {np.max(np.abs(fx)):.3e} above {tol} at {tuple(x)}")
    return float(x[0]), float(x[1])
