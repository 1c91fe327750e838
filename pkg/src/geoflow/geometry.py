"""Metric and cometric algebra, projections, brackets, curvature and cocurvature.

Every operation works pointwise in chart coordinates.  Vector fields are
callables ``X(y) -> (n,)`` that accept dual arrays; tensorial quantities are
evaluated with constant-component extensions unless told otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .config import DEFAULT_TOLERANCES, Tolerances
from .dual import value
from .errors import DifferentiationError, FrameNotOrthonormal, MetricDegenerate


def check_spd(g: np.ndarray, x=None, tol: float = DEFAULT_TOLERANCES.spd_tol) -> None:
    g = value(g)
    if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise MetricDegenerate(f"metric not symmetric at x={x}")
    lam = np.linalg.eigvalsh(g).min()
    if not lam > tol:
        raise MetricDegenerate(f"metric not positive definite at x={x}: min eigenvalue {lam:.3g}")


def sharp(model, x, p, chart: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Raise an index with the Riemannian metric: ``g(x)^{-1} p``."""
    g = value(model.g(np.asarray(x, dtype=float), chart))
    check_spd(g, x, tol.spd_tol)
    return np.linalg.solve(g, np.asarray(p, dtype=float))


def flat(model, x, v, chart: int = 0) -> np.ndarray:
    return value(model.g(np.asarray(x, dtype=float), chart)) @ np.asarray(v, dtype=float)


def sharp_sub(s_star: Callable, x, p, chart: int = 0) -> np.ndarray:
    """``s*(p, .)``: the (possibly degenerate) cometric applied to ``p``."""
    return value(s_star(np.asarray(x, dtype=float), chart)) @ np.asarray(p, dtype=float)


@dataclass(frozen=True)
class CometricField:
    """A PSD matrix field on covectors with its declared rank."""

    s_star: Callable
    rank: int
    name: str = ""

    def __call__(self, x, chart: int = 0):
        return self.s_star(x, chart)

    def check(self, x, chart: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
        """Verify symmetry, PSD and rank at ``x``; returns the numerical rank."""
        S = value(self.s_star(np.asarray(x, dtype=float), chart))
        scale = max(1.0, np.abs(S).max())
        if np.abs(S - S.T).max() > 1e-12 * scale:
            raise MetricDegenerate(f"cometric {self.name} not symmetric at x={x}")
        lam = np.linalg.eigvalsh(S)
        if lam.min() < -tol.rank_tol * scale:
            raise MetricDegenerate(f"cometric {self.name} not PSD at x={x}: {lam.min():.3g}")
        rank = int(np.sum(lam > tol.rank_tol * scale))
        if rank != self.rank:
            raise MetricDegenerate(f"cometric {self.name} has rank {rank}, declared {self.rank}, at x={x}")
        return rank


def frame_gram(model, x, chart: int = 0, which: str = "horizontal") -> np.ndarray:
    FH, FV = model.frame(np.asarray(x, dtype=float), chart)
    A = value(FH if which == "horizontal" else FV)
    return A.T @ value(model.g(np.asarray(x, dtype=float), chart)) @ A


def cometric_from_frame(model, which: str, points=None, tol: Tolerances = DEFAULT_TOLERANCES) -> CometricField:
    """Cometric ``A A^T`` from the horizontal or vertical frame columns ``A``.

    Orthonormality of the selected frame is checked at ``points`` (default:
    a small low-discrepancy sample of the model).
    """
    if which not in ("horizontal", "vertical"):
        raise ValueError("which must be 'horizontal' or 'vertical'")
    points = model.sample_points(4) if points is None else points
    for x, c in points:
        G = frame_gram(model, x, c, which)
        dev = float(np.abs(G - np.eye(G.shape[0])).max())
        if dev > 1e-10:
            raise FrameNotOrthonormal(f"{which} frame of {model.name} not orthonormal at x={x}: Gram deviation {dev:.3g}")
    col = 0 if which == "horizontal" else 1

    def s_star(y, chart=0):
        A = model.frame(y, chart)[col]
        return A @ A.T

    rank = model.horizontal_rank if which == "horizontal" else model.vertical_rank
    return CometricField(s_star, rank, which)


def project(model, x, v, onto: str, chart: int = 0) -> np.ndarray:
    """Projection of a tangent vector onto H or V along the complementary subbundle."""
    x = np.asarray(x, dtype=float)
    if onto in ("H", "h", "horizontal"):
        P = model.pr_h(x, chart)
    elif onto in ("V", "v", "vertical"):
        P = model.pr_v(x, chart)
    else:
        raise ValueError("onto must be 'H' or 'V'")
    return value(P) @ np.asarray(v, dtype=float)


def orthonormal_basis(model, x, chart: int = 0, which: str = "horizontal") -> np.ndarray:
    """g-orthonormal basis of H or V at ``x`` as matrix columns."""
    x = np.asarray(x, dtype=float)
    g = value(model.g(x, chart))
    if model.has_frame:
        A = value(model.frame(x, chart)[0 if which == "horizontal" else 1])
    else:
        P = value(model.pr_h(x, chart) if which == "horizontal" else model.pr_v(x, chart))
        k = model.horizontal_rank if which == "horizontal" else model.vertical_rank
        U, _, _ = np.linalg.svd(P)
        A = U[:, :k]
    G = A.T @ g @ A
    w, Q = np.linalg.eigh(G)
    return A @ Q @ np.diag(w**-0.5) @ Q.T


def projection_jet(model, x, chart: int = 0):
    """``(PH, dPH)`` with ``dPH[r, c, a] = d PH[r, c] / d x_a`` (exact)."""
    return dual.jacobian(lambda y: model.pr_h(y, chart), x)


# -- brackets ---------------------------------------------------------------
def lie_bracket(X: Callable, Y: Callable, x, method: str = "dual") -> np.ndarray:
    """``[X, Y] = DY X - DX Y`` in chart coordinates."""
    x = np.asarray(x, dtype=float)
    Xv, DX = dual.jacobian(X, x, method)
    Yv, DY = dual.jacobian(Y, x, method)
    return DY @ Xv - DX @ Yv


def bracket_field(X: Callable, Y: Callable) -> Callable:
    """The bracket as a vector field; differentiable further only by central differences."""

    def field(y):
        if isinstance(y, dual.Dual):
            raise DifferentiationError("bracket fields do not propagate dual numbers")
        return lie_bracket(X, Y, y)

    return field


def jacobi_residual(X: Callable, Y: Callable, Z: Callable, x) -> float:
    """``|[X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]]|`` with inner brackets exact, outer ones by central differences."""
    x = np.asarray(x, dtype=float)
    total = (
        lie_bracket(X, bracket_field(Y, Z), x, "auto")
        + lie_bracket(Y, bracket_field(Z, X), x, "auto")
        + lie_bracket(Z, bracket_field(X, Y), x, "auto")
    )
    return float(np.linalg.norm(total))


# -- curvature of the splitting -----------------------------------------------
def _extension(model, x, v, chart, extension, seed=0):
    """A vector field through ``v`` at ``x``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if extension == "constant":
        return lambda y: v + 0.0 * y
    if extension == "frame":
        FH, FV = model.frame(x, chart)
        F = np.concatenate([value(FH), value(FV)], axis=1)
        c = np.linalg.solve(F, v)

        def field(y):
            GH, GV = model.frame(y, chart)
            return np.concatenate([GH, GV], axis=1) @ c

        return field
    if extension == "affine":
        A = np.random.default_rng(seed).standard_normal((x.size, x.size))
        return lambda y: v + A @ (y - x)
    raise ValueError(f"unknown extension {extension!r}")


def curvature(model, v, w, x, chart: int = 0, extension: str = "constant") -> np.ndarray:
    """``R(v, w) = pr_V [pr_H X, pr_H Y]`` for extensions ``X``, ``Y`` of ``v``, ``w``."""
    X = _extension(model, x, v, chart, extension, 1)
    Y = _extension(model, x, w, chart, extension, 2)
    br = lie_bracket(lambda y: model.pr_h(y, chart) @ X(y), lambda y: model.pr_h(y, chart) @ Y(y), x)
    return value(model.pr_v(np.asarray(x, dtype=float), chart)) @ br


def cocurvature(model, v, w, x, chart: int = 0, extension: str = "constant") -> np.ndarray:
    """``Rbar(v, w) = pr_H [pr_V X, pr_V Y]``."""
    X = _extension(model, x, v, chart, extension, 3)
    Y = _extension(model, x, w, chart, extension, 4)
    br = lie_bracket(lambda y: model.pr_v(y, chart) @ X(y), lambda y: model.pr_v(y, chart) @ Y(y), x)
    return value(model.pr_h(np.asarray(x, dtype=float), chart)) @ br


def curvature_tensors(model, x, chart: int = 0):
    """Full arrays ``R[k, i, j] = R(e_i, e_j)^k`` and ``Rbar[k, i, j]`` from one projection jet."""
    PH, dPH = projection_jet(model, np.asarray(x, dtype=float), chart)
    PV = np.eye(PH.shape[0]) - PH
    dPV = -dPH
    # [P e_i, P e_j] = dP[:, j, :] P e_i - dP[:, i, :] P e_j
    bH = np.einsum("rja,ai->rij", dPH, PH)
    bH = bH - bH.transpose(0, 2, 1)
    bV = np.einsum("rja,ai->rij", dPV, PV)
    bV = bV - bV.transpose(0, 2, 1)
    R = np.einsum("kr,rij->kij", PV, bH)
    Rbar = np.einsum("kr,rij->kij", PH, bV)
    return R, Rbar


def bracket_generating_rank(model, x, chart: int = 0) -> int:
    """Rank of span{H, [H, H]} at ``x`` (step-2 check)."""
    x = np.asarray(x, dtype=float)
    FH, _ = model.frame(x, chart)
    FH = value(FH)
    cols = [FH[:, a] for a in range(FH.shape[1])]
    k = FH.shape[1]
    for a in range(k):
        for b in range(a + 1, k):
            Xa = lambda y, a=a: model.frame(y, chart)[0][:, a]
            Xb = lambda y, b=b: model.frame(y, chart)[0][:, b]
            cols.append(lie_bracket(Xa, Xb, x))
    return int(np.linalg.matrix_rank(np.stack(cols, axis=1), tol=1e-9))
