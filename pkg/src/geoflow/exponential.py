"""Sub-Riemannian and Riemannian exponentials, the factorization through two
Riemannian exponentials, projection agreement over a submersion, and horizontal lifts."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .config import FlowConfig
from .dual import value
from .errors import FoliationNotDeclared, LiftDiverged, SubmersionNotDeclared
from .geometry import flat, orthonormal_basis, sharp
from .connections import RNABLA
from .hamiltonian import PhaseState, integrate

DEFAULT_T_GRID = (0.1, 0.25, 0.5, 0.75, 1.0)


def _grid(t_grid):
    t = np.asarray(sorted(set(float(s) for s in t_grid)), dtype=float)
    if t.size == 0 or t[0] < 0:
        raise ValueError("t_grid must contain nonnegative times")
    return t if t[0] == 0.0 else np.concatenate([[0.0], t])


def exp_sr(model, x, p, t: float, chart: int = 0, cfg: FlowConfig | None = None):
    """``exp^sr(x, t p)``: base point of the ``H^h`` flow from ``p`` at time ``t``."""
    if t == 0:
        return np.asarray(x, dtype=float).copy(), chart
    s = integrate(model, "h", PhaseState(x, p, chart), [0.0, t], cfg).final
    return s.x, s.chart


@dataclass
class GeodesicResult:
    x: np.ndarray
    chart: int
    velocity: np.ndarray
    transported: np.ndarray | None
    energy_drift: float


def exp_r(model, x, v, t: float, chart: int = 0, cfg: FlowConfig | None = None, transport=None) -> GeodesicResult:
    """Riemannian geodesic with initial velocity ``v`` at time ``t``.

    Integrated as the ``H^g`` flow of the covector ``v^flat``; ``transport``
    (vectors as columns) is carried by Levi-Civita parallel transport in the
    same ODE system.
    """
    p = flat(model, x, v, chart)
    traj = integrate(model, "g", PhaseState(x, p, chart), [0.0, float(t)], cfg, transport)
    s = traj.final
    return GeodesicResult(
        s.x,
        s.chart,
        value(model.g_star(s.x, s.chart)) @ s.p,
        None if transport is None else traj.vectors[-1],
        traj.energy_drift,
    )


# -- factorization -------------------------------------------------------------------
@dataclass
class FactorizationReport:
    model: str
    x: list
    p: list
    chart: int
    step: float
    integrator: str
    t_grid: list
    primary_residuals: list
    alternate_residuals: list
    transport_velocity_gap: float
    energy_drift: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def factorization_points(model, x, p, t_grid=DEFAULT_T_GRID, chart: int = 0, cfg: FlowConfig | None = None, alternate_transport: str = RNABLA):
    """Endpoints ``exp^sr(x, tp)``, the primary factorization and the alternate one, per grid time.

    The alternate form transports ``#p`` along the vertical geodesic
    ``exp^r(x, -s pr_V #p)`` with the split connection by default; Levi-Civita
    transport there does not reproduce ``exp^sr`` when ``H`` is not integrable.
    """
    if not model.declared.V_integrable:
        raise FoliationNotDeclared(f"model {model.name} declares no integrable vertical bundle")
    cfg = cfg or FlowConfig()
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    grid = _grid(t_grid)
    v = sharp(model, x, p, chart, cfg.tolerances)
    w = value(model.pr_v(x, chart)) @ v

    sr = integrate(model, "h", PhaseState(x, p, chart), grid, cfg)
    riem = integrate(model, "g", PhaseState(x, p, chart), grid, cfg, vectors=v[:, None])
    first_alt = integrate(
        model, "g", PhaseState(x, flat(model, x, -w, chart), chart), grid, cfg, vectors=v[:, None], transport_kind=alternate_transport
    )

    out = []
    gap = 0.0
    drift = max(sr.energy_drift, riem.energy_drift, first_alt.energy_drift)
    for i, t in enumerate(grid):
        if t == 0.0:
            continue
        j = riem.grid_index[i]
        target = sr.at_grid(i)
        # primary: exp^r(exp^r(x, t #p), -t pr_V P_t #p)
        y, cy = riem.x[j], int(riem.chart[j])
        Pv = riem.vectors[j][:, 0]
        gap = max(gap, float(np.linalg.norm(Pv - value(model.g_star(y, cy)) @ riem.p[j])))
        wv = value(model.pr_v(y, cy)) @ Pv
        prim = exp_r(model, y, -wv, t, cy, cfg)
        # alternate: exp^r(exp^r(x, -t pr_V #p), t P~_t #p)
        k = first_alt.grid_index[i]
        y2, c2 = first_alt.x[k], int(first_alt.chart[k])
        alt = exp_r(model, y2, first_alt.vectors[k][:, 0], t, c2, cfg)
        drift = max(drift, prim.energy_drift, alt.energy_drift)
        out.append((t, (target.x, target.chart), (prim.x, prim.chart), (alt.x, alt.chart)))
    return out, gap, drift


def factorization_check(
    model, x, p, t_grid=DEFAULT_T_GRID, chart: int = 0, cfg: FlowConfig | None = None, alternate_transport: str = RNABLA
) -> FactorizationReport:
    """Distances from ``exp^sr(x, tp)`` to both factorized forms at every grid time."""
    cfg = cfg or FlowConfig()
    pts, gap, drift = factorization_points(model, x, p, t_grid, chart, cfg, alternate_transport)
    prim = [model.distance(*a, *b) for _, a, b, _ in pts]
    alt = [model.distance(*a, *c) for _, a, _, c in pts]
    return FactorizationReport(
        model=model.name,
        x=np.asarray(x, dtype=float).tolist(),
        p=np.asarray(p, dtype=float).tolist(),
        chart=chart,
        step=cfg.step,
        integrator=cfg.integrator,
        t_grid=[t for t, *_ in pts],
        primary_residuals=prim,
        alternate_residuals=alt,
        transport_velocity_gap=gap,
        energy_drift=drift,
        extra={"alternate_transport": alternate_transport},
    )


# -- horizontal lifts ----------------------------------------------------------------
def horizontal_velocity(model, x, chart: int, bdot) -> np.ndarray:
    """The unique horizontal vector at ``x`` whose image under ``pi_*`` is ``bdot`` (base ambient coordinates)."""
    sub = model.submersion
    EH = orthonormal_basis(model, x, chart, "horizontal")
    A = value(sub.jacobian(x, chart)) @ EH
    c, *_ = np.linalg.lstsq(A, np.asarray(bdot, dtype=float), rcond=None)
    return EH @ c


@dataclass
class LiftResult:
    t: np.ndarray
    x: np.ndarray
    chart: np.ndarray
    horizontality: float
    tracking: float


def horizontal_lift(model, base_curve, times, x0, chart: int = 0, cfg: FlowConfig | None = None) -> LiftResult:
    """Solve ``gamma' = h_gamma(beta')`` with RK4 for a base curve ``beta``.

    ``base_curve(t)`` returns ``(beta(t), beta'(t))`` in the base ambient
    coordinates of the model's submersion.  Each interval of ``times`` is split
    into steps no longer than ``cfg.step``.
    """
    if model.submersion is None:
        raise SubmersionNotDeclared(f"model {model.name} declares no submersion")
    cfg = cfg or FlowConfig()
    tol = cfg.tolerances
    atlas = model.atlas
    times = np.asarray(times, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    b0, _ = base_curve(times[0])
    if np.linalg.norm(value(model.submersion.pi(x, chart)) - b0) > tol.lift_tol:
        raise LiftDiverged("starting point does not lie over the base curve")

    def f(t, y, c):
        return horizontal_velocity(model, y, c, base_curve(t)[1])

    ts, xs, cs = [times[0]], [x.copy()], [chart]
    horiz = track = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        n = max(1, int(np.ceil((t1 - t0) / cfg.step - 1e-9)))
        h = (t1 - t0) / n
        for k in range(n):
            t = t0 + k * h
            k1 = f(t, x, chart)
            k2 = f(t + h / 2, x + h / 2 * k1, chart)
            k3 = f(t + h / 2, x + h / 2 * k2, chart)
            k4 = f(t + h, x + h * k3, chart)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise LiftDiverged(f"horizontal lift blew up at t={t + h:g}")
            new = atlas.choose_chart(x, chart)
            if new != chart:
                x, chart = np.asarray(atlas.transition(x, chart, new), dtype=float), new
        b, bd = base_curve(t1)
        track = max(track, float(np.linalg.norm(value(model.submersion.pi(x, chart)) - b)))
        u = horizontal_velocity(model, x, chart, bd)
        horiz = max(horiz, float(np.linalg.norm(value(model.pr_v(x, chart)) @ u)))
        ts.append(t1)
        xs.append(x.copy())
        cs.append(chart)
    if track > tol.violation_tol:
        raise LiftDiverged(f"lift lost track of the base curve (deviation {track:.3g})")
    return LiftResult(np.array(ts), np.array(xs), np.array(cs), horiz, track)


def projected_geodesic(model, x, p, t_end: float, chart: int = 0, cfg: FlowConfig | None = None):
    """``t -> pi(exp^r(x, t #p))`` as a Hermite-interpolated base curve, plus its samples."""
    sub = model.submersion
    traj = integrate(model, "g", PhaseState(x, p, chart), [0.0, t_end], cfg)
    B, Bd = [], []
    for xk, pk, ck in zip(traj.x, traj.p, traj.chart):
        ck = int(ck)
        B.append(value(sub.pi(xk, ck)))
        Bd.append(value(sub.jacobian(xk, ck)) @ (value(model.g_star(xk, ck)) @ pk))
    spline = CubicHermiteSpline(traj.t, np.array(B), np.array(Bd), axis=0)
    deriv = spline.derivative()
    return (lambda t: (spline(t), deriv(t))), traj


def projection_agreement(model, x, p, t_grid=DEFAULT_T_GRID, chart: int = 0, cfg: FlowConfig | None = None, lift: bool = True) -> dict:
    """Base distances between ``pi(exp^sr(x, tp))`` and ``pi(exp^r(x, t #p))``; optionally also the
    distance from ``exp^sr(x, tp)`` to the horizontal lift of the projected Riemannian geodesic."""
    if model.submersion is None:
        raise SubmersionNotDeclared(f"model {model.name} declares no submersion")
    cfg = cfg or FlowConfig()
    sub = model.submersion
    grid = _grid(t_grid)
    sr = integrate(model, "h", PhaseState(x, p, chart), grid, cfg)
    riem = integrate(model, "g", PhaseState(x, p, chart), grid, cfg)
    agree = []
    for i, t in enumerate(grid):
        if t == 0.0:
            continue
        a, b = sr.at_grid(i), riem.at_grid(i)
        agree.append(float(np.linalg.norm(value(sub.pi(a.x, a.chart)) - value(sub.pi(b.x, b.chart)))))
    out = {
        "model": model.name,
        "t_grid": [float(t) for t in grid if t > 0],
        "agreement_residuals": agree,
        "agreement_sup": max(agree),
        "step": cfg.step,
    }
    if lift:
        curve, _ = projected_geodesic(model, x, p, float(grid[-1]), chart, cfg)
        res = horizontal_lift(model, curve, grid, x, chart, cfg)
        lift_res = []
        for i, t in enumerate(grid):
            if t == 0.0:
                continue
            a = sr.at_grid(i)
            lift_res.append(model.distance(a.x, a.chart, res.x[i], int(res.chart[i])))
        out.update(lift_residuals=lift_res, lift_sup=max(lift_res), lift_horizontality=res.horizontality, lift_tracking=res.tracking)
    return out
