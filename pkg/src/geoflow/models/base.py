"""The :class:`ModelSpace` container shared by every built-in manifold."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .. import dual
from ..charts import Atlas, EuclideanAtlas, StereographicAtlas
from ..dual import value
from ..errors import FrameDegenerate


@dataclass(frozen=True)
class DeclaredProperties:
    """Hypotheses a model makes about its splitting; diagnostics supply the evidence."""

    V_integrable: bool = True
    totally_geodesic: bool = True
    riemannian_foliation: bool = True
    principal_bundle: bool = False
    orthogonal: bool = True

    @property
    def rnabla_parallel(self) -> bool:
        return self.totally_geodesic and self.riemannian_foliation and self.orthogonal

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Submersion:
    """A submersion ``pi: M -> B`` with ``B`` described by its own atlas and metric.

    ``pi`` returns ambient coordinates of the base point (the base atlas's
    embedding space); ``jacobian`` its derivative with respect to the chart
    coordinates of ``M``.  Both must accept dual arrays.
    """

    pi: Callable
    jacobian: Callable
    base_atlas: Atlas
    base_metric: Callable

    @property
    def base_dim(self) -> int:
        return self.base_atlas.dim

    def base_chart(self, b):
        """Base chart coordinates and chart id of an ambient base point."""
        return self.base_atlas.from_ambient(value(b))

    def pi_chart(self, x, chart, bchart):
        """``pi`` followed by the base chart map, and its Jacobian (both dual-compatible)."""
        b = self.pi(x, chart)
        J = self.jacobian(x, chart)
        if isinstance(self.base_atlas, EuclideanAtlas):
            return b, J
        atlas = self.base_atlas
        return atlas.chart_map(b, bchart), atlas.chart_map_jacobian(b, bchart) @ J


@dataclass(frozen=True)
class PrincipalBundle:
    """Right principal G-bundle data for an abelian or non-abelian structure group.

    ``fundamental(x, chart)`` returns the fundamental fields ``xi_A`` as the
    columns of an ``(n, r)`` matrix; ``omega(x, chart)`` the connection form as
    an ``(r, n)`` matrix; ``act(x, chart, A)`` the point ``x . exp^G(A)``.
    ``structure[c, a, b]`` are the Lie algebra structure constants in the
    orthonormal basis used by ``fundamental``.
    """

    fundamental: Callable
    omega: Callable
    act: Callable
    structure: np.ndarray
    group: str = "U(1)"

    @property
    def algebra_dim(self) -> int:
        return self.structure.shape[0]


class ModelSpace:
    """A Riemannian manifold in charts with a splitting ``TM = H (+) V``.

    The splitting comes either from a frame (``frame(x, chart) -> (FH, FV)``)
    or, for models without global frames, from a vertical cometric closure
    ``v_star(x, chart)`` with ``V`` the ``g``-orthogonal complement of ``H``.
    Every closure takes chart coordinates and a chart id and must accept dual
    arrays.
    """

    def __init__(
        self,
        name: str,
        atlas: Atlas,
        metric: Callable,
        *,
        horizontal_rank: int,
        frame: Callable | None = None,
        v_star: Callable | None = None,
        g_star: Callable | None = None,
        declared: DeclaredProperties = DeclaredProperties(),
        submersion: Submersion | None = None,
        bundle: PrincipalBundle | None = None,
        interesting_points: tuple = (),
        canonical_states: tuple = (),
        sample_box: float = 1.0,
        description: str = "",
    ):
        if frame is None and v_star is None:
            raise ValueError("a model needs a frame or a vertical cometric")
        self.name = name
        self.atlas = atlas
        self._metric = metric
        self._frame = frame
        self._v_star = v_star
        self._g_star = g_star
        self.horizontal_rank = horizontal_rank
        self.declared = declared
        self.submersion = submersion
        self.bundle = bundle
        self.interesting_points = tuple((np.asarray(x, dtype=float), int(c)) for x, c in interesting_points)
        self.canonical_states = tuple((np.asarray(x, dtype=float), np.asarray(p, dtype=float), int(c)) for x, p, c in canonical_states)
        self.sample_box = sample_box
        self.description = description

    def __repr__(self):
        return f"ModelSpace({self.name!r}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.atlas.dim

    @property
    def vertical_rank(self) -> int:
        return self.dim - self.horizontal_rank

    @property
    def has_frame(self) -> bool:
        return self._frame is not None

    # -- metric and cometrics ---------------------------------------------
    def g(self, x, chart: int = 0):
        return self._metric(x, chart)

    def g_star(self, x, chart: int = 0):
        if self._g_star is not None:
            return self._g_star(x, chart)
        return dual.inv(self.g(x, chart))

    def frame(self, x, chart: int = 0):
        if self._frame is None:
            raise FrameDegenerate(f"model {self.name} has no global frame")
        return self._frame(x, chart)

    def h_star(self, x, chart: int = 0):
        if self._frame is not None:
            FH, _ = self._frame(x, chart)
            return FH @ FH.T
        return self.g_star(x, chart) - self._v_star(x, chart)

    def v_star(self, x, chart: int = 0):
        if self._v_star is not None:
            return self._v_star(x, chart)
        _, FV = self._frame(x, chart)
        return FV @ FV.T

    def cometric(self, which: str) -> Callable:
        """``'h'``, ``'v'`` or ``'g'`` cometric closure."""
        try:
            return {"h": self.h_star, "v": self.v_star, "g": self.g_star}[which]
        except KeyError:
            raise ValueError(f"cometric must be 'h', 'v' or 'g', got {which!r}") from None

    # -- projections -------------------------------------------------------
    def pr_h(self, x, chart: int = 0):
        """Matrix of the projection onto H along V."""
        if self._frame is not None:
            FH, FV = self._frame(x, chart)
            F = np.concatenate([FH, FV], axis=1)
            cond = np.linalg.cond(value(F))
            if not np.isfinite(cond) or cond > 1e12:
                raise FrameDegenerate(f"frame of {self.name} degenerate at x={value(x)} (chart {chart}), cond={cond:.3g}")
            Finv = dual.inv(F)
            return FH @ Finv[: self.horizontal_rank]
        return np.eye(self.dim) - self.pr_v(x, chart)

    def pr_v(self, x, chart: int = 0):
        if self._frame is not None:
            return np.eye(self.dim) - self.pr_h(x, chart)
        return self._v_star(x, chart) @ self.g(x, chart)

    # -- embedding -----------------------------------------------------------
    def to_ambient(self, x, chart: int = 0):
        return self.atlas.to_ambient(x, chart)

    def from_ambient(self, P):
        return self.atlas.from_ambient(P)

    def distance(self, a, ca: int, b, cb: int) -> float:
        """Chart-invariant distance: Euclidean in the embedding space."""
        return float(np.linalg.norm(value(self.to_ambient(np.asarray(a), ca)) - value(self.to_ambient(np.asarray(b), cb))))

    # -- sampling ------------------------------------------------------------
    def sample_points(self, n: int, seed: int = 0, include_interesting: bool = True):
        """Low-discrepancy sample of points (chart coordinates, chart id)."""
        pts = list(self.interesting_points) if include_interesting else []
        if isinstance(self.atlas, StereographicAtlas):
            d = self.atlas.ambient_dim
            u = qmc.Halton(d, scramble=True, seed=seed).random(n)
            z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
            for zi in z:
                P = self.atlas.radius * zi / np.linalg.norm(zi)
                pts.append(self.atlas.from_ambient(P))
        else:
            u = qmc.Halton(self.dim, scramble=True, seed=seed).random(n)
            for ui in u:
                pts.append(((2.0 * ui - 1.0) * self.sample_box, 0))
        return pts

    def random_states(self, n: int, seed: int = 0, norm: float = 1.0):
        """Seeded random (x, p, chart) with ``p`` of unit ``g*``-norm times ``norm``."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            if isinstance(self.atlas, StereographicAtlas):
                z = rng.standard_normal(self.atlas.ambient_dim)
                x, c = self.atlas.from_ambient(self.atlas.radius * z / np.linalg.norm(z))
            else:
                x, c = rng.uniform(-self.sample_box, self.sample_box, self.dim), 0
            p = rng.standard_normal(self.dim)
            p = norm * p / np.sqrt(p @ value(self.g_star(x, c)) @ p)
            out.append((x, p, c))
        return out

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "horizontal_rank": self.horizontal_rank,
            "vertical_rank": self.vertical_rank,
            "atlas": repr(self.atlas),
            "declared": self.declared.to_dict(),
            "submersion": self.submersion is not None,
            "base_dim": self.submersion.base_dim if self.submersion else None,
            "structure_group": self.bundle.group if self.bundle else None,
            "description": self.description,
        }
