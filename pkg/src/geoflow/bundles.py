"""Checks specific to principal bundles with a connection form: the gauge formula for
``exp^sr`` and the Levi-Civita relations between lifted, fundamental and base fields."""

from __future__ import annotations

import numpy as np

from . import dual
from .config import FlowConfig
from .connections import christoffel, christoffel_from_metric
from .dual import value
from .errors import NotPrincipalBundle
from .exponential import DEFAULT_T_GRID, _grid
from .geometry import curvature_tensors, sharp
from .hamiltonian import PhaseState, integrate


def _require_bundle(model):
    if model.bundle is None or not model.declared.principal_bundle:
        raise NotPrincipalBundle(f"model {model.name} has no principal bundle structure")
    return model.bundle


def gauge_formula_check(model, x, p, t_grid=DEFAULT_T_GRID, chart: int = 0, cfg: FlowConfig | None = None) -> dict:
    """Compare ``exp^sr(x, tp)`` with ``exp^r(x, t #p) . exp^G(-t omega(#p))``.

    Also reports the sup deviation of ``omega(gamma')`` along the Riemannian
    geodesic and, for the pure fibre direction ``v = pr_V #p``, the distance
    between ``exp^r(x, t v)`` and ``x . exp^G(t omega(v))``.
    """
    bundle = _require_bundle(model)
    cfg = cfg or FlowConfig()
    x = np.asarray(x, dtype=float)
    grid = _grid(t_grid)
    v = sharp(model, x, p, chart, cfg.tolerances)
    A = value(bundle.omega(x, chart)) @ v

    sr = integrate(model, "h", PhaseState(x, p, chart), grid, cfg)
    riem = integrate(model, "g", PhaseState(x, p, chart), grid, cfg)
    gauge = []
    for i, t in enumerate(grid):
        if t == 0.0:
            continue
        a, b = sr.at_grid(i), riem.at_grid(i)
        y, cy = bundle.act(b.x, b.chart, -t * A)
        gauge.append(model.distance(a.x, a.chart, y, cy))

    omega_dev = 0.0
    for xk, pk, ck in zip(riem.x, riem.p, riem.chart):
        ck = int(ck)
        w = value(bundle.omega(xk, ck)) @ (value(model.g_star(xk, ck)) @ pk)
        omega_dev = max(omega_dev, float(np.abs(w - A).max()))

    vert = value(model.pr_v(x, chart)) @ v
    fiber = []
    if np.linalg.norm(vert) > 0:
        fib = integrate(model, "g", PhaseState(x, value(model.g(x, chart)) @ vert, chart), grid, cfg)
        Av = value(bundle.omega(x, chart)) @ vert
        for i, t in enumerate(grid):
            if t == 0.0:
                continue
            b = fib.at_grid(i)
            y, cy = bundle.act(x, chart, t * Av)
            fiber.append(model.distance(b.x, b.chart, y, cy))
    return {
        "model": model.name,
        "t_grid": [float(t) for t in grid if t > 0],
        "omega_sharp_p": np.asarray(A).tolist(),
        "gauge_residuals": gauge,
        "gauge_sup": max(gauge),
        "omega_deviation": omega_dev,
        "fiber_geodesic_residuals": fiber,
        "fiber_geodesic_sup": max(fiber) if fiber else 0.0,
        "step": cfg.step,
    }


# -- Levi-Civita relations -----------------------------------------------------------
def _lift_field(model, Xb, bchart):
    """Horizontal lift of the base field ``Xb`` (base chart components) as a field on ``M``."""
    sub = model.submersion

    def field(u, chart):
        FH, _ = model.frame(u, chart)
        b, J = sub.pi_chart(u, chart, bchart)
        return FH @ dual.solve(J @ FH, Xb(b))

    return field


def _levi_civita(model, X, Y, x, chart):
    """``nabla^g_X Y`` at ``x`` for dual-compatible fields ``X(u, chart)``, ``Y(u, chart)``."""
    G = christoffel(model, x, chart)
    Xv = value(X(x, chart))
    Yv, DY = dual.jacobian(lambda u: Y(u, chart), x)
    return DY @ Xv + np.einsum("kij,i,j->k", G, Xv, Yv)


def lcpb_point_residuals(model, x, chart: int = 0, seed: int = 0) -> dict:
    """Residuals of the four Levi-Civita relations at ``x`` for random affine base fields.

    The mixed relation is checked in the torsion-free form
    ``nabla_{hX} xi = nabla_{xi} hX = -1/2 #g(xi, R(hX, .))``.
    """
    bundle = _require_bundle(model)
    sub = model.submersion
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    b, bchart = sub.base_chart(value(sub.pi(x, chart)))
    k = sub.base_dim
    c1, c2 = rng.standard_normal(k), rng.standard_normal(k)
    A1, A2 = rng.standard_normal((k, k)), rng.standard_normal((k, k))
    Xb = lambda w: c1 + A1 @ (w - b)
    Yb = lambda w: c2 + A2 @ (w - b)
    hX, hY = _lift_field(model, Xb, bchart), _lift_field(model, Yb, bchart)
    g = value(model.g(x, chart))
    R, _ = curvature_tensors(model, x, chart)
    hXv, hYv = value(hX(x, chart)), value(hY(x, chart))

    # horizontal-horizontal
    Gb = christoffel_from_metric(lambda w: sub.base_metric(w, bchart), b)
    _, DYb = dual.jacobian(Yb, b)
    nabla_b = DYb @ Xb(b) + np.einsum("kij,i,j->k", Gb, Xb(b), Yb(b))
    lhs = _levi_civita(model, hX, hY, x, chart)
    rhs = value(_lift_field(model, lambda w: nabla_b, bchart)(x, chart)) + 0.5 * np.einsum("kij,i,j->k", R, hXv, hYv)
    hh = float(np.linalg.norm(lhs - rhs))

    out = {"hh": hh, "xixi": 0.0, "h_xi": 0.0, "xi_h": 0.0, "paper_sign_xi_h": 0.0}
    r = bundle.algebra_dim
    for a in range(r):
        xi = lambda u, c, a=a: bundle.fundamental(u, c)[:, a]
        xiv = value(xi(x, chart))
        for bidx in range(r):
            xib = lambda u, c, bidx=bidx: bundle.fundamental(u, c)[:, bidx]
            lhs = _levi_civita(model, xi, xib, x, chart)
            rhs = 0.5 * value(bundle.fundamental(x, chart)) @ np.einsum("cab->c", bundle.structure[:, a : a + 1, bidx : bidx + 1])
            out["xixi"] = max(out["xixi"], float(np.linalg.norm(lhs - rhs)))
        # -1/2 #g(xi, R(hX, .))
        alpha = np.einsum("k,kl,lij,i->j", xiv, g, R, hXv)
        target = -0.5 * np.linalg.solve(g, alpha)
        h_xi = _levi_civita(model, hX, xi, x, chart)
        xi_h = _levi_civita(model, xi, hX, x, chart)
        out["h_xi"] = max(out["h_xi"], float(np.linalg.norm(h_xi - target)))
        out["xi_h"] = max(out["xi_h"], float(np.linalg.norm(xi_h - target)))
        out["paper_sign_xi_h"] = max(out["paper_sign_xi_h"], float(np.linalg.norm(-xi_h - target)))
    return out


def lcpb_relations_check(model, points=None, n: int = 20, seed: int = 0) -> dict:
    """Sup residuals of the Levi-Civita relations over sample points."""
    _require_bundle(model)
    points = model.sample_points(n, seed, include_interesting=False) if points is None else points
    sup = {}
    for i, (x, c) in enumerate(points):
        for key, val in lcpb_point_residuals(model, x, c, seed + i).items():
            sup[key] = max(sup.get(key, 0.0), val)
    return {"model": model.name, "n_samples": len(points), "residuals": sup}
