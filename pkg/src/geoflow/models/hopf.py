"""Hopf fibrations S^1 -> S^3 -> S^2(1/2) and S^7 -> S^15 -> S^8(1/2).

Both total spaces carry the round unit metric in stereographic charts, so
``g = lambda(u) I`` with ``lambda`` the conformal factor of the chart.  Ambient
tangent vectors ``a`` are pulled into the chart with ``Dpsi^T a / lambda``.
"""

from __future__ import annotations

import numpy as np

from .. import algebra
from ..dual import value
from ..charts import StereographicAtlas
from .base import DeclaredProperties, ModelSpace, PrincipalBundle, Submersion

_RI = algebra.right_matrix(algebra.I)  # q -> q i
_RJ = algebra.right_matrix(algebra.J)
_RK = algebra.right_matrix(algebra.K)


def _round_metric(atlas):
    n = atlas.dim

    def g(u, chart=0):
        return atlas.metric_factor(u) * np.eye(n)

    def g_star(u, chart=0):
        return np.eye(n) / atlas.metric_factor(u)

    return g, g_star


def _sphere_base(radius, dim):
    atlas = StereographicAtlas(dim, radius=radius)
    return atlas, (lambda w, chart=0: atlas.metric_factor(w) * np.eye(dim))


# -- quaternionic: S^3 as a principal U(1)-bundle -------------------------------
def _hopf_map(q):
    """``q i conj(q) / 2`` as a vector of R^3."""
    return 0.5 * algebra.multiply(algebra.multiply(q, algebra.I), algebra.conj(q))[1:]


def _hopf_map_jacobian(q):
    """Derivative of :func:`_hopf_map` in ambient coordinates, shape (3, 4)."""
    C = algebra.structure_constants(4)
    qbar = algebra.conj(q)
    qi = _RI @ q
    conj_matrix = np.diag([1.0, -1.0, -1.0, -1.0])
    # v -> (v i) conj(q)  and  v -> (q i) conj(v)
    A = np.einsum("ijk,k,jl->il", C, qbar, _RI)
    B = np.einsum("ijk,j,kl->il", C, qi, conj_matrix)
    return 0.5 * (A + B)[1:]


def hopf_s3() -> ModelSpace:
    """Unit quaternions with U(1) acting on the right by ``cos t + i sin t``.

    ``V`` is spanned by ``q i``, ``H`` by ``q j`` and ``q k``; ``omega(v) = <q i, v>``.
    """
    atlas = StereographicAtlas(3)
    g, g_star = _round_metric(atlas)

    def pull(u, chart, ambient_cols):
        return atlas.embedding_jacobian(u, chart).T @ ambient_cols / atlas.metric_factor(u)

    def frame(u, chart=0):
        q = atlas.to_ambient(u, chart)
        FH = pull(u, chart, np.stack([_RJ @ q, _RK @ q], axis=1))
        FV = pull(u, chart, np.reshape(_RI @ q, (4, 1)))
        return FH, FV

    def pi(u, chart=0):
        return _hopf_map(atlas.to_ambient(u, chart))

    def pi_jacobian(u, chart=0):
        return _hopf_map_jacobian(atlas.to_ambient(u, chart)) @ atlas.embedding_jacobian(u, chart)

    def fundamental(u, chart=0):
        return frame(u, chart)[1]

    def omega(u, chart=0):
        q = atlas.to_ambient(u, chart)
        return np.reshape((_RI @ q) @ atlas.embedding_jacobian(u, chart), (1, 3))

    def act(u, chart, A):
        q = atlas.to_ambient(np.asarray(u, dtype=float), chart)
        return atlas.from_ambient(algebra.multiply(q, algebra.u1_exp(float(np.ravel(A)[0]))))

    # at q = 1: #p = (unit horizontal) + 1/2 (fibre direction)
    u0, c0 = atlas.from_ambient(algebra.ONE)
    FH0, FV0 = frame(u0, c0)
    p0 = g(u0, c0) @ (FH0[:, 0] + 0.5 * FV0[:, 0])

    base_atlas, base_metric = _sphere_base(0.5, 2)
    return ModelSpace(
        "hopf_s3",
        atlas,
        g,
        horizontal_rank=2,
        frame=frame,
        g_star=g_star,
        declared=DeclaredProperties(True, True, True, principal_bundle=True),
        submersion=Submersion(pi, pi_jacobian, base_atlas, base_metric),
        bundle=PrincipalBundle(fundamental, omega, act, np.zeros((1, 1, 1)), "U(1)"),
        interesting_points=((np.zeros(3), 0), (np.array([0.3, -0.2, 0.5]), 1)),
        canonical_states=((u0, p0, c0),),
        description="Hopf fibration S^1 -> S^3 -> S^2(1/2), principal U(1)-bundle, round metric",
    )


# -- octonionic: S^15 over S^8(1/2), no principal structure ----------------------
def _outer(P):
    return np.einsum("i,j->ij", P, P)


_CONJ8 = np.diag([1.0] + [-1.0] * 7)
_EYE8 = np.eye(8)


def fiber_projector(P):
    """Orthogonal projector of R^16 onto the octonionic line through ``P = (x, y)``.

    The line is ``{(u, m u)}`` with ``m = y x^-1`` when ``|x| >= |y|``, and
    ``{(n w, w)}`` with ``n = x y^-1`` otherwise.
    """
    x, y = P[:8], P[8:]
    if np.sum(value(x) ** 2) >= np.sum(value(y) ** 2):
        m = algebra.multiply(y, algebra.inverse(x))
        A = np.concatenate([_EYE8, algebra.left_matrix(m)], axis=0)
        s = 1.0 + np.sum(m * m)
    else:
        n = algebra.multiply(x, algebra.inverse(y))
        A = np.concatenate([algebra.left_matrix(n), _EYE8], axis=0)
        s = 1.0 + np.sum(n * n)
    return (A @ A.T) / s


def octonionic_hopf_map(P):
    x, y = P[:8], P[8:]
    top = np.reshape(0.5 * (np.sum(x * x) - np.sum(y * y)), (1,))
    return np.concatenate([top, algebra.multiply(y, algebra.conj(x))])


def _octonionic_hopf_jacobian(P):
    x, y = P[:8], P[8:]
    top = np.reshape(np.concatenate([x, -y]), (1, 16))
    # d(y conj(x)) = dy conj(x) + y conj(dx)
    rest = np.concatenate([algebra.left_matrix(y) @ _CONJ8, algebra.right_matrix(algebra.conj(x))], axis=1)
    return np.concatenate([top, rest], axis=0)


def octonionic_hopf() -> ModelSpace:
    """The unit sphere of O x O foliated by octonionic lines.

    There is no global frame; ``V`` is carried by the vertical cometric built
    from the fibre projector and ``H`` is its orthogonal complement.
    """
    atlas = StereographicAtlas(15)
    g, g_star = _round_metric(atlas)

    def v_star(u, chart=0):
        P = atlas.to_ambient(u, chart)
        PV = fiber_projector(P) - _outer(P)
        D = atlas.embedding_jacobian(u, chart)
        lam = atlas.metric_factor(u)
        return D.T @ PV @ D / (lam * lam)

    def pi(u, chart=0):
        return octonionic_hopf_map(atlas.to_ambient(u, chart))

    def pi_jacobian(u, chart=0):
        return _octonionic_hopf_jacobian(atlas.to_ambient(u, chart)) @ atlas.embedding_jacobian(u, chart)

    base_atlas, base_metric = _sphere_base(0.5, 8)
    return ModelSpace(
        "octonionic_hopf",
        atlas,
        g,
        horizontal_rank=8,
        v_star=v_star,
        g_star=g_star,
        declared=DeclaredProperties(True, True, True, principal_bundle=False),
        submersion=Submersion(pi, pi_jacobian, base_atlas, base_metric),
        interesting_points=((np.zeros(15), 0),),
        description="octonionic Hopf fibration S^7 -> S^15 -> S^8(1/2); no principal bundle structure",
    )

