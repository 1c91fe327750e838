"""Coordinate charts and atlases.

Two atlases cover every built-in model: a single global chart on R^n and the
stereographic pair on a round sphere S^n(r) embedded in R^(n+1).  All maps
accept :class:`~geoflow.dual.Dual` arrays so that metrics and frames built on
top of them are differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .dual import value
from .errors import OutOfChart


@dataclass(frozen=True)
class Chart:
    id: int
    dim: int
    domain_guard: Callable[[np.ndarray], bool]
    transitions: tuple = ()  # (target id, forward map, inverse map)


class Atlas:
    """Base atlas: charts, transitions, and an embedding used for distances."""

    dim: int
    ambient_dim: int
    charts: tuple

    def guard(self, x, chart: int) -> bool:
        return bool(self.charts[chart].domain_guard(value(x)))

    def transition(self, x, src: int, dst: int):
        if src == dst:
            return x
        for target, fwd, _ in self.charts[src].transitions:
            if target == dst:
                return fwd(x)
        raise OutOfChart(f"no transition from chart {src} to chart {dst}")

    def transition_jacobian(self, x, src: int, dst: int) -> np.ndarray:
        """Jacobian of the transition map at ``x`` (dual-number exact)."""
        return dual.jacobian(lambda y: self.transition(y, src, dst), value(x))[1]

    def choose_chart(self, x, chart: int) -> int:
        """Chart that should hold the point ``x`` given in ``chart``."""
        return chart

    def guard_description(self, chart: int) -> str:
        return f"chart {chart} guard"

    def to_ambient(self, x, chart: int):
        raise NotImplementedError

    def from_ambient(self, P):
        raise NotImplementedError

    def embedding_jacobian(self, x, chart: int):
        raise NotImplementedError

    def check(self, points, tol: float = 1e-12) -> float:
        """Max round-trip error of every transition over ``points``; raises if a guard fails."""
        worst = 0.0
        for x, c in points:
            for target, fwd, inv in self.charts[c].transitions:
                y = fwd(np.asarray(x, dtype=float))
                worst = max(worst, float(np.max(np.abs(inv(y) - x))))
        return worst


class EuclideanAtlas(Atlas):
    """Single global chart on R^n; the guard is a sup-norm box of half-width ``bound``."""

    def __init__(self, dim: int, bound: float = 1e3):
        self.dim = dim
        self.ambient_dim = dim
        self.bound = float(bound)
        b = self.bound
        self.charts = (Chart(0, dim, lambda x: bool(np.all(np.abs(x) <= b))),)

    def to_ambient(self, x, chart: int = 0):
        return x

    def from_ambient(self, P):
        P = np.asarray(P, dtype=float)
        if not self.guard(P, 0):
            raise OutOfChart(f"point {P} outside chart 0 guard |x|_inf <= {self.bound:g}")
        return P, 0

    def embedding_jacobian(self, x, chart: int = 0):
        return np.eye(self.dim)

    def guard_description(self, chart: int) -> str:
        return f"chart {chart} guard |x|_inf <= {self.bound:g}"

    def __repr__(self):
        return f"EuclideanAtlas(dim={self.dim}, bound={self.bound:g})"


class StereographicAtlas(Atlas):
    """Stereographic pair on the sphere of radius ``radius`` in R^(n+1).

    Chart 0 projects from the pole ``Q e_{n+1}``, chart 1 from ``-Q e_{n+1}``
    (``Q`` an optional rotation).  The transition is the inversion
    ``u -> u / |u|^2``; a point is handed over when ``|u|`` exceeds
    ``guard_radius``.
    """

    def __init__(self, dim: int, radius: float = 1.0, rotation=None, guard_radius: float = 2.0):
        self.dim = dim
        self.ambient_dim = dim + 1
        self.radius = float(radius)
        self.rotation = np.eye(dim + 1) if rotation is None else np.asarray(rotation, dtype=float)
        self.guard_radius = float(guard_radius)
        gr = self.guard_radius

        def guard(x):
            return bool(np.all(np.isfinite(x)) and np.dot(x, x) <= gr * gr)

        def invert(u):
            return u / np.sum(u * u)

        self.charts = (
            Chart(0, dim, guard, ((1, invert, invert),)),
            Chart(1, dim, guard, ((0, invert, invert),)),
        )

    def _sign(self, chart):
        return 1.0 if chart == 0 else -1.0

    def to_ambient(self, x, chart: int = 0):
        r2 = np.sum(x * x)
        s = self._sign(chart)
        b = np.concatenate([2.0 * x, np.reshape(s * (r2 - 1.0), (1,))]) / (1.0 + r2)
        return self.radius * (self.rotation @ b)

    def embedding_jacobian(self, x, chart: int = 0):
        """Closed-form d(to_ambient)/dx, shape (n+1, n)."""
        n = self.dim
        r2 = np.sum(x * x)
        d = 1.0 + r2
        s = self._sign(chart)
        top = 2.0 * np.eye(n) / d - 4.0 * np.einsum("i,j->ij", x, x) / (d * d)
        bottom = np.reshape(s * 4.0 * x / (d * d), (1, n))
        return self.radius * (self.rotation @ np.concatenate([top, bottom], axis=0))

    def chart_map(self, P, chart: int):
        """Stereographic coordinates of an ambient point (dual-compatible)."""
        b = (self.rotation.T @ P) / self.radius
        s = self._sign(chart)
        return b[: self.dim] / (1.0 - s * b[self.dim])

    def chart_map_jacobian(self, P, chart: int):
        """Closed-form d(chart_map)/dP, shape (n, n+1)."""
        b = (self.rotation.T @ P) / self.radius
        s = self._sign(chart)
        den = 1.0 - s * b[self.dim]
        left = np.eye(self.dim) / den
        right = np.reshape(s * b[: self.dim] / (den * den), (self.dim, 1))
        return np.concatenate([left, right], axis=1) @ self.rotation.T / self.radius

    def metric_factor(self, x):
        """Conformal factor: the pulled-back round metric is ``factor * I``."""
        return 4.0 * self.radius**2 / (1.0 + np.sum(x * x)) ** 2

    def from_ambient(self, P):
        P = np.asarray(P, dtype=float)
        b = self.rotation.T @ P / self.radius
        chart = 0 if b[self.dim] <= 0.0 else 1
        return self.chart_map(P, chart), chart

    def choose_chart(self, x, chart: int) -> int:
        if np.dot(value(x), value(x)) > 1.0:
            return 1 - chart
        return chart

    def guard_description(self, chart: int) -> str:
        pole = "north" if chart == 0 else "south"
        return f"chart {chart} ({pole}-pole stereographic) guard |u| <= {self.guard_radius:g}"

    def __repr__(self):
        return f"StereographicAtlas(dim={self.dim}, radius={self.radius:g})"


def project_to_sphere(P, radius: float = 1.0):
    P = np.asarray(P, dtype=float)
    return radius * P / np.linalg.norm(P)
