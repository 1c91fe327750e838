"""Models on R^3 with a single global chart."""

from __future__ import annotations

import numpy as np

from ..charts import EuclideanAtlas
from .base import DeclaredProperties, ModelSpace, PrincipalBundle, Submersion

_E3 = np.eye(3)
_CANONICAL = ((np.zeros(3), np.array([1.0, 0.0, 1.0]), 0),)


def _zero(x):
    return 0.0 * x[0]


def _pi_xy(x, chart=0):
    return x[:2]


def _pi_xy_jacobian(x, chart=0):
    return _E3[:2]


def _flat_base():
    return EuclideanAtlas(2), (lambda w, chart=0: np.eye(2))


def _translation_bundle(omega_row):
    def act(x, chart, A):
        return np.asarray(x, dtype=float) + np.array([0.0, 0.0, float(np.ravel(A)[0])]), chart

    return PrincipalBundle(
        fundamental=lambda x, chart=0: _E3[:, 2:],
        omega=omega_row,
        act=act,
        structure=np.zeros((1, 1, 1)),
        group="R",
    )


# -- Heisenberg -------------------------------------------------------------
def _heisenberg_frame(x, chart=0):
    X = np.stack([1.0 + _zero(x), _zero(x), -0.5 * x[1]])
    Y = np.stack([_zero(x), 1.0 + _zero(x), 0.5 * x[0]])
    return np.stack([X, Y], axis=1), _E3[:, 2:]


def _heisenberg_metric(x, chart=0):
    a, b = x[0], x[1]
    return np.stack(
        [
            np.stack([1.0 + b * b / 4.0, -a * b / 4.0, b / 2.0]),
            np.stack([-a * b / 4.0, 1.0 + a * a / 4.0, -a / 2.0]),
            np.stack([b / 2.0, -a / 2.0, 1.0 + _zero(x)]),
        ]
    )


def _heisenberg_cometric(x, chart=0):
    a, b = x[0], x[1]
    return np.stack(
        [
            np.stack([1.0 + _zero(x), _zero(x), -b / 2.0]),
            np.stack([_zero(x), 1.0 + _zero(x), a / 2.0]),
            np.stack([-b / 2.0, a / 2.0, 1.0 + (a * a + b * b) / 4.0]),
        ]
    )


def _heisenberg_omega(x, chart=0):
    return np.reshape(np.stack([x[1] / 2.0, -x[0] / 2.0, 1.0 + _zero(x)]), (1, 3))


def heisenberg() -> ModelSpace:
    """Heisenberg group: frame ``X = dx - y/2 dz``, ``Y = dy + x/2 dz``, ``Z = dz``, orthonormal.

    A principal R-bundle over the (x, y)-plane with connection form
    ``dz - (x dy - y dx)/2``.
    """
    base_atlas, base_metric = _flat_base()
    return ModelSpace(
        "heisenberg",
        EuclideanAtlas(3),
        _heisenberg_metric,
        horizontal_rank=2,
        frame=_heisenberg_frame,
        g_star=_heisenberg_cometric,
        declared=DeclaredProperties(True, True, True, principal_bundle=True),
        submersion=Submersion(_pi_xy, _pi_xy_jacobian, base_atlas, base_metric),
        bundle=_translation_bundle(_heisenberg_omega),
        interesting_points=((np.zeros(3), 0), (np.array([0.0, 2.0, 0.0]), 0)),
        canonical_states=_CANONICAL,
        sample_box=1.0,
        description="Heisenberg group H^3 with left-invariant taming metric; pi(x,y,z) = (x,y)",
    )


# -- flat split ------------------------------------------------------------
def flat_split() -> ModelSpace:
    """Euclidean R^3 split as span(dx, dy) (+) span(dz)."""
    base_atlas, base_metric = _flat_base()
    return ModelSpace(
        "flat_split",
        EuclideanAtlas(3),
        lambda x, chart=0: _E3,
        horizontal_rank=2,
        frame=lambda x, chart=0: (_E3[:, :2], _E3[:, 2:]),
        g_star=lambda x, chart=0: _E3,
        declared=DeclaredProperties(True, True, True, principal_bundle=True),
        submersion=Submersion(_pi_xy, _pi_xy_jacobian, base_atlas, base_metric),
        bundle=_translation_bundle(lambda x, chart=0: _E3[2:]),
        interesting_points=((np.zeros(3), 0),),
        canonical_states=_CANONICAL,
        description="flat R^3 = R^2 x R, trivial bundle",
    )


# -- warped negative control ----------------------------------------------------
def _warped_metric(x, chart=0):
    return np.diag(np.stack([1.0 + _zero(x), 1.0 + _zero(x), np.exp(2.0 * x[0])]))


def _warped_cometric(x, chart=0):
    return np.diag(np.stack([1.0 + _zero(x), 1.0 + _zero(x), np.exp(-2.0 * x[0])]))


def _warped_frame(x, chart=0):
    FV = np.reshape(np.stack([_zero(x), _zero(x), np.exp(-x[0])]), (3, 1))
    return _E3[:, :2], FV


def warped_control() -> ModelSpace:
    """``dx^2 + dy^2 + e^{2x} dz^2`` split as span(dx, dy) (+) span(dz).

    A Riemannian foliation whose leaves are not totally geodesic: the negative
    control for every identity that needs both properties.
    """
    base_atlas, base_metric = _flat_base()
    return ModelSpace(
        "warped_control",
        EuclideanAtlas(3, bound=100.0),
        _warped_metric,
        horizontal_rank=2,
        frame=_warped_frame,
        g_star=_warped_cometric,
        declared=DeclaredProperties(True, False, True, principal_bundle=False),
        submersion=Submersion(_pi_xy, _pi_xy_jacobian, base_atlas, base_metric),
        interesting_points=((np.zeros(3), 0),),
        canonical_states=_CANONICAL,
        description="warped product R^2 x_{e^x} R; fibres not totally geodesic",
    )
