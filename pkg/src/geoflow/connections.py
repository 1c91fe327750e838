"""Levi-Civita and split connections, transport, and foliation diagnostics.

Connection coefficients are arrays ``G[k, i, j]`` with
``nabla_{d_i} d_j = G[k, i, j] d_k``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .config import DEFAULT_TOLERANCES, Tolerances
from .dual import value
from .errors import DifferentiationError, TransportDiverged
from .geometry import curvature_tensors, lie_bracket, orthonormal_basis, projection_jet

LEVI_CIVITA = "levi_civita"
RNABLA = "rnabla"


def christoffel_from_metric(g: Callable, x) -> np.ndarray:
    """Levi-Civita coefficients of the metric closure ``g(y)`` at ``x``."""
    gv, dg = dual.jacobian(g, np.asarray(x, dtype=float))
    ginv = np.linalg.inv(gv)
    # dg[i, j, l] = d_l g_ij;  lower[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    lower = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", ginv, lower)


def christoffel(model, x, chart: int = 0) -> np.ndarray:
    return christoffel_from_metric(lambda y: model.g(y, chart), x)


def rnabla_coeffs(model, x, chart: int = 0) -> np.ndarray:
    """Coefficients of the split connection from the four-term formula on coordinate fields."""
    x = np.asarray(x, dtype=float)
    PH, dPH = projection_jet(model, x, chart)
    n = PH.shape[0]
    PV = np.eye(n) - PH
    dPV = -dPH
    G = christoffel(model, x, chart)
    # D(P e_j) . (Q e_i)  ->  [r, i, j]
    def d(dP, Q):
        return np.einsum("rja,ai->rij", dP, Q)

    def gam(A, B):
        return np.einsum("kab,ai,bj->kij", G, A, B)

    t1 = np.einsum("kr,rij->kij", PH, d(dPH, PH) + gam(PH, PH))
    t2 = np.einsum("kr,rij->kij", PV, d(dPV, PV) + gam(PV, PV))
    # [PV e_i, PH e_j] = D(PH e_j) PV e_i - D(PV e_i) PH e_j
    t3 = np.einsum("kr,rij->kij", PH, d(dPH, PV) - np.einsum("ria,aj->rij", dPV, PH))
    t4 = np.einsum("kr,rij->kij", PV, d(dPV, PH) - np.einsum("ria,aj->rij", dPH, PV))
    return t1 + t2 + t3 + t4


@dataclass(frozen=True)
class Connection:
    """An affine connection on a model: Levi-Civita of ``g`` or the split connection."""

    model: object
    kind: str = LEVI_CIVITA

    def __post_init__(self):
        if self.kind not in (LEVI_CIVITA, RNABLA):
            raise ValueError(f"kind must be {LEVI_CIVITA!r} or {RNABLA!r}")

    def coeffs(self, x, chart: int = 0) -> np.ndarray:
        if self.kind == LEVI_CIVITA:
            return christoffel(self.model, x, chart)
        return rnabla_coeffs(self.model, x, chart)

    def torsion(self, x, chart: int = 0) -> np.ndarray:
        """``T[k, i, j] = T(e_i, e_j)^k``."""
        G = self.coeffs(x, chart)
        return G - G.transpose(0, 2, 1)


def _covariant(G, X: Callable, Y: Callable, x):
    Xv = value(X(x))
    Yv, DY = dual.jacobian(Y, x)
    return DY @ Xv + np.einsum("kij,i,j->k", G, Xv, Yv)


def rnabla_fields(model, X: Callable, Y: Callable, x, chart: int = 0) -> np.ndarray:
    """Four-term split connection applied to vector fields ``X``, ``Y`` at ``x``."""
    x = np.asarray(x, dtype=float)
    G = christoffel(model, x, chart)
    PH = value(model.pr_h(x, chart))
    PV = np.eye(PH.shape[0]) - PH

    def h(F):
        return lambda y: model.pr_h(y, chart) @ F(y)

    def v(F):
        return lambda y: model.pr_v(y, chart) @ F(y)

    t1 = PH @ _covariant(G, h(X), h(Y), x)
    t2 = PV @ _covariant(G, v(X), v(Y), x)
    t3 = PH @ lie_bracket(v(X), h(Y), x)
    t4 = PV @ lie_bracket(h(X), v(Y), x)
    return t1 + t2 + t3 + t4


def covderiv(conn: Connection, X: Callable, Y: Callable, x, chart: int = 0, check_splitting: bool = False, tol: float = 1e-9) -> np.ndarray:
    """``nabla_X Y`` at ``x``; the split connection uses the four-term formula directly.

    With ``check_splitting`` the split connection is asserted to map horizontal
    fields to H and vertical fields to V.
    """
    x = np.asarray(x, dtype=float)
    if conn.kind == LEVI_CIVITA:
        return _covariant(christoffel(conn.model, x, chart), X, Y, x)
    out = rnabla_fields(conn.model, X, Y, x, chart)
    if check_splitting:
        model = conn.model
        hY = rnabla_fields(model, X, lambda y: model.pr_h(y, chart) @ Y(y), x, chart)
        vY = rnabla_fields(model, X, lambda y: model.pr_v(y, chart) @ Y(y), x, chart)
        leak = max(np.abs(value(model.pr_v(x, chart)) @ hY).max(), np.abs(value(model.pr_h(x, chart)) @ vY).max())
        if leak > tol * max(1.0, np.abs(out).max()):
            raise AssertionError(f"split connection leaks across H/V at x={x}: {leak:.3g}")
    return out


def rnabla_torsion(model, v, w, x, chart: int = 0) -> np.ndarray:
    """``T(v, w) = nabla_X Y - nabla_Y X - [X, Y]`` with constant-component extensions."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    X = lambda y: v + 0.0 * y
    Y = lambda y: w + 0.0 * y
    return rnabla_fields(model, X, Y, x, chart) - rnabla_fields(model, Y, X, x, chart) - lie_bracket(X, Y, x)


def torsion_identity_residual(model, v, w, x, chart: int = 0) -> float:
    """``|T(v, w) + R(v, w) + Rbar(v, w)|`` for the split connection."""
    R, Rbar = curvature_tensors(model, x, chart)
    T = rnabla_torsion(model, v, w, x, chart)
    return float(np.linalg.norm(T + np.einsum("kij,i,j->k", R + Rbar, v, w)))


def nabla_metric(conn: Connection, x, chart: int = 0) -> np.ndarray:
    """``D[i, j, k] = (nabla_{e_i} g)(e_j, e_k)``."""
    x = np.asarray(x, dtype=float)
    gv, dg = dual.jacobian(lambda y: conn.model.g(y, chart), x)
    G = conn.coeffs(x, chart)
    return np.einsum("jki->ijk", dg) - np.einsum("lij,lk->ijk", G, gv) - np.einsum("lik,jl->ijk", G, gv)


def covderiv_metric(conn: Connection, v, w1, w2, x, chart: int = 0) -> float:
    """``(nabla_v g)(w1, w2)``."""
    return float(np.einsum("ijk,i,j,k->", nabla_metric(conn, x, chart), v, w1, w2))


def second_fundamental_form(model, z1, z2, x, chart: int = 0) -> np.ndarray:
    """``II(z1, z2) = pr_H nabla^g_{pr_V Z1} pr_V Z2`` (Levi-Civita, constant-component extensions)."""
    x = np.asarray(x, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    G = christoffel(model, x, chart)
    Z1 = lambda y: model.pr_v(y, chart) @ z1
    Z2 = lambda y: model.pr_v(y, chart) @ z2
    return value(model.pr_h(x, chart)) @ _covariant(G, Z1, Z2, x)


def lie_derivative_metric(model, X: Callable, x, chart: int = 0) -> np.ndarray:
    """``(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k``."""
    x = np.asarray(x, dtype=float)
    gv, dg = dual.jacobian(lambda y: model.g(y, chart), x)
    Xv, DX = dual.jacobian(X, x)
    return np.einsum("ijk,k->ij", dg, Xv) + np.einsum("kj,ki->ij", gv, DX) + np.einsum("ik,kj->ij", gv, DX)


# -- parallel transport ---------------------------------------------------------
@dataclass
class TransportResult:
    t: np.ndarray
    vectors: np.ndarray
    charts: np.ndarray
    points: np.ndarray


def parallel_transport(conn: Connection, curve: Callable, times, v0) -> TransportResult:
    """Solve ``nabla_{gamma'} v = 0`` with RK4 on the grid ``times``.

    ``curve(t)`` returns ``(x, xdot, chart)``.  Stage evaluations are mapped into
    the chart of the step start; ``v`` follows the curve across chart changes
    through the transition Jacobian.
    """
    atlas = conn.model.atlas
    times = np.asarray(times, dtype=float)
    v = np.asarray(v0, dtype=float).copy()
    x0, _, chart = curve(times[0])
    vs, cs, xs = [v.copy()], [chart], [np.asarray(x0, dtype=float)]

    def rhs(t, v, chart):
        x, xd, c = curve(t)
        if c != chart:
            J = atlas.transition_jacobian(x, c, chart)
            x, xd = atlas.transition(np.asarray(x, dtype=float), c, chart), J @ xd
        G = conn.coeffs(x, chart)
        return -np.einsum("kij,i,j->k", G, xd, v)

    for t0, t1 in zip(times[:-1], times[1:]):
        h = t1 - t0
        k1 = rhs(t0, v, chart)
        k2 = rhs(t0 + h / 2, v + h / 2 * k1, chart)
        k3 = rhs(t0 + h / 2, v + h / 2 * k2, chart)
        k4 = rhs(t1, v + h * k3, chart)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x1, _, c1 = curve(t1)
        if c1 != chart:
            xprev = atlas.transition(np.asarray(x1, dtype=float), c1, chart)
            v = atlas.transition_jacobian(xprev, chart, c1) @ v
            chart = c1
        if not np.all(np.isfinite(v)):
            raise TransportDiverged(f"transport diverged at t={t1} near x={x1}")
        vs.append(v.copy())
        cs.append(chart)
        xs.append(np.asarray(x1, dtype=float))
    return TransportResult(times, np.array(vs), np.array(cs), np.array(xs))


# -- foliation diagnostics ---------------------------------------------------------
@dataclass
class FoliationReport:
    model: str
    n_samples: int
    tg_residual: float
    rf_residual: float
    rnabla_g_residual: float
    trace_residual: float
    cocurvature_residual: float
    tolerances: dict
    verdicts: dict = field(default_factory=dict)
    decomposition_ok: bool = True
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def mismatches(self, declared) -> list[str]:
        """Names of verdicts that disagree with a model's declared properties."""
        expected = {
            "totally_geodesic": declared.totally_geodesic,
            "riemannian_foliation": declared.riemannian_foliation,
            "rnabla_parallel": declared.rnabla_parallel,
            "V_integrable": declared.V_integrable,
        }
        return [k for k, v in expected.items() if k in self.verdicts and self.verdicts[k] != v]


def _spec_norm(S):
    S = 0.5 * (S + S.T)
    return float(np.abs(np.linalg.eigvalsh(S)).max()) if S.size else 0.0


def foliation_point_residuals(model, x, chart: int = 0, trace: bool = True) -> dict:
    """Residuals of the foliation conditions at one point, in g-orthonormal bases."""
    x = np.asarray(x, dtype=float)
    EH = orthonormal_basis(model, x, chart, "horizontal")
    EV = orthonormal_basis(model, x, chart, "vertical")
    PH, dPH = projection_jet(model, x, chart)
    PV = np.eye(model.dim) - PH
    gv, dg = dual.jacobian(lambda y: model.g(y, chart), x)

    def lie_g(Xv, DX):
        return np.einsum("ijk,k->ij", dg, Xv) + np.einsum("kj,ki->ij", gv, DX) + np.einsum("ik,kj->ij", gv, DX)

    tg = 0.0
    for a in range(EH.shape[1]):
        e = EH[:, a]
        L = lie_g(PH @ e, np.einsum("kci,c->ki", dPH, e))
        tg = max(tg, _spec_norm(EV.T @ L @ EV))
    rf = 0.0
    for b in range(EV.shape[1]):
        e = EV[:, b]
        L = lie_g(PV @ e, -np.einsum("kci,c->ki", dPH, e))
        rf = max(rf, _spec_norm(EH.T @ L @ EH))
    E = np.concatenate([EH, EV], axis=1)
    D = nabla_metric(Connection(model, RNABLA), x, chart)
    rn = float(np.abs(np.einsum("ijk,ia,jb,kc->abc", D, E, E, E)).max())
    R, Rbar = curvature_tensors(model, x, chart)
    cc = float(np.abs(np.einsum("kij,ia,jb,kl,lc->abc", Rbar, EV, EV, gv, E)).max()) if EV.shape[1] > 1 else 0.0
    tr = trace_condition(model, x, chart, EH, E) if trace else float("nan")
    return {"tg": tg, "rf": rf, "rnabla_g": rn, "cocurvature": cc, "trace": tr}


def trace_condition(model, x, chart: int = 0, EH=None, Ys=None) -> float:
    """Sup over unit ``Y`` of ``|tr(X -> pr_H [pr_V Y, pr_V [pr_H Y, pr_H X]])|``.

    The inner bracket is exact; the outer one uses central differences of it.
    """
    x = np.asarray(x, dtype=float)
    EH = orthonormal_basis(model, x, chart, "horizontal") if EH is None else EH
    if Ys is None:
        Ys = np.concatenate([EH, orthonormal_basis(model, x, chart, "vertical")], axis=1)
    gv = value(model.g(x, chart))
    PH = value(model.pr_h(x, chart))
    worst = 0.0
    for c in range(Ys.shape[1]):
        Yc = Ys[:, c]
        tr = 0.0
        for a in range(EH.shape[1]):
            Xa = EH[:, a]
            hY = lambda y, Yc=Yc: model.pr_h(y, chart) @ Yc
            hX = lambda y, Xa=Xa: model.pr_h(y, chart) @ Xa

            def W(y, hY=hY, hX=hX):
                if isinstance(y, dual.Dual):
                    raise DifferentiationError("nested bracket: use central differences")
                return value(model.pr_v(y, chart)) @ lie_bracket(hY, hX, y)

            vY = lambda y, Yc=Yc: model.pr_v(y, chart) @ Yc
            M = PH @ lie_bracket(vY, W, x, "auto")
            tr += Xa @ gv @ M
        worst = max(worst, abs(tr))
    return worst


def foliation_diagnostics(model, points=None, tol: Tolerances = DEFAULT_TOLERANCES, trace: bool = True, seed: int = 0, n: int = 16) -> FoliationReport:
    """Sup residuals of the totally-geodesic, Riemannian-foliation and parallelism conditions."""
    points = model.sample_points(n, seed) if points is None else points
    sup = {"tg": 0.0, "rf": 0.0, "rnabla_g": 0.0, "cocurvature": 0.0, "trace": 0.0}
    decomposition_ok = True
    for x, c in points:
        r = foliation_point_residuals(model, x, c, trace)
        if r["rnabla_g"] > r["tg"] + r["rf"] + tol.cross_tol:
            decomposition_ok = False
        for k in sup:
            sup[k] = max(sup[k], r[k]) if np.isfinite(r[k]) else r[k]
    ft = tol.foliation_tol
    verdicts = {
        "totally_geodesic": sup["tg"] <= ft,
        "riemannian_foliation": sup["rf"] <= ft,
        "rnabla_parallel": sup["rnabla_g"] <= ft,
        "V_integrable": sup["cocurvature"] <= ft,
    }
    if trace:
        verdicts["trace_condition"] = sup["trace"] <= ft
    return FoliationReport(
        model=model.name,
        n_samples=len(points),
        tg_residual=sup["tg"],
        rf_residual=sup["rf"],
        rnabla_g_residual=sup["rnabla_g"],
        trace_residual=sup["trace"],
        cocurvature_residual=sup["cocurvature"],
        tolerances={"foliation_tol": ft, "cross_tol": tol.cross_tol},
        verdicts={k: bool(v) for k, v in verdicts.items()},
        decomposition_ok=decomposition_ok,
        seed=seed,
    )
