"""Verification suites: each compares what a model declares with what the numerics show.

An identity is *expected* to hold exactly when the model's declared properties
satisfy the hypotheses of the corresponding theorem; it is *observed* to hold
when its residual is below ``identity_tol`` and to be violated when the
residual exceeds ``violation_tol``.  A suite matches when expectation and
observation agree, so a negative control passes by failing its identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import gauge_formula_check, lcpb_relations_check
from .config import FlowConfig
from .connections import foliation_diagnostics
from .errors import NotPrincipalBundle, SubmersionNotDeclared
from .exponential import factorization_check, projection_agreement
from .hamiltonian import PhaseState, flow_commutation_residual, normal_geodesic_residual, poisson_bracket

SUITES = ("foliation", "commute", "factorization", "projection", "gauge", "lcpb")


@dataclass(frozen=True)
class SuiteInputs:
    states: tuple
    cfg: FlowConfig
    t_grid: tuple
    seed: int
    n_bracket: int = 100


def select_states(model, n_states: int, seed: int, x=None, p=None, chart: int = 0, norm: float = 1.0):
    """Explicit ``(x, p)`` if given, else the model's canonical states followed by seeded random ones."""
    if p is not None:
        if x is None:
            x, chart = model.interesting_points[0] if model.interesting_points else (np.zeros(model.dim), 0)
        return ((np.asarray(x, dtype=float), np.asarray(p, dtype=float), int(chart)),)
    return tuple(model.canonical_states) + tuple(model.random_states(n_states, seed, norm))


def _observe(residual: float, tol) -> str:
    if residual <= tol.identity_tol:
        return "holds"
    if residual >= tol.violation_tol:
        return "violated"
    return "inconclusive"


def _verdict(suite: str, expected: bool, observed: str, residuals: dict, **extra) -> dict:
    want = "holds" if expected else "violated"
    if expected:
        message = "identity holds as declared" if observed == want else "identity fails although hypotheses are declared"
    else:
        message = "identity violated as declared" if observed == want else "identity not violated although hypotheses fail"
    return {"suite": suite, "expected": want, "observed": observed, "match": observed == want, "message": message, "residuals": residuals, **extra}


def suite_foliation(model, inp: SuiteInputs) -> dict:
    rep = foliation_diagnostics(model, tol=inp.cfg.tolerances, seed=inp.seed, trace=True)
    mism = rep.mismatches(model.declared)
    return {
        "suite": "foliation",
        "expected": model.declared.to_dict(),
        "observed": rep.verdicts,
        "match": not mism and rep.decomposition_ok,
        "message": "verdicts match declarations" if not mism else f"mismatched: {', '.join(mism)}",
        "residuals": {
            "tg": rep.tg_residual,
            "rf": rep.rf_residual,
            "rnabla_g": rep.rnabla_g_residual,
            "trace": rep.trace_residual,
            "cocurvature": rep.cocurvature_residual,
        },
        "decomposition_ok": rep.decomposition_ok,
        "n_samples": rep.n_samples,
    }


def suite_commute(model, inp: SuiteInputs) -> dict:
    tol = inp.cfg.tolerances
    brackets = [abs(poisson_bracket(model, "h", "v", x, p, c)) for x, p, c in model.random_states(inp.n_bracket, inp.seed)]
    brackets += [abs(poisson_bracket(model, "h", "v", x, p, c)) for x, p, c in inp.states]
    hg = hv = 0.0
    for x, p, c in inp.states:
        st = PhaseState(x, p, c)
        hg = max(hg, max(flow_commutation_residual(model, st, 1.0, 1.0, inp.cfg, ("h", "g"))))
        hv = max(hv, max(flow_commutation_residual(model, st, 1.0, 1.0, inp.cfg, ("h", "v"))))
    pb = max(brackets)
    res = {"poisson_bracket_sup": pb, "flow_h_g": hg, "flow_h_v": hv}
    if pb <= tol.foliation_tol and max(hg, hv) <= tol.identity_tol:
        observed = "holds"
    elif pb >= tol.violation_tol or max(hg, hv) >= tol.violation_tol:
        observed = "violated"
    else:
        observed = "inconclusive"
    return _verdict("commute", model.declared.rnabla_parallel, observed, res, n_bracket_states=len(brackets))


def suite_factorization(model, inp: SuiteInputs) -> dict:
    d = model.declared
    prim, alt, rows = 0.0, 0.0, []
    for x, p, c in inp.states:
        rep = factorization_check(model, x, p, inp.t_grid, c, inp.cfg)
        prim = max(prim, max(rep.primary_residuals))
        alt = max(alt, max(rep.alternate_residuals))
        rows.append({"primary": rep.primary_residuals, "alternate": rep.alternate_residuals, "t_grid": rep.t_grid})
    expected = d.V_integrable and d.totally_geodesic and d.riemannian_foliation and d.orthogonal
    return _verdict("factorization", expected, _observe(max(prim, alt), inp.cfg.tolerances), {"primary_sup": prim, "alternate_sup": alt}, per_state=rows)


def suite_projection(model, inp: SuiteInputs) -> dict:
    if model.submersion is None:
        raise SubmersionNotDeclared(f"model {model.name} declares no submersion")
    agree = lift = 0.0
    for x, p, c in inp.states:
        rep = projection_agreement(model, x, p, inp.t_grid, c, inp.cfg)
        agree = max(agree, rep["agreement_sup"])
        lift = max(lift, rep["lift_sup"])
    d = model.declared
    expected = d.orthogonal and d.totally_geodesic
    return _verdict("projection", expected, _observe(agree, inp.cfg.tolerances), {"agreement_sup": agree, "lift_sup": lift})


def suite_gauge(model, inp: SuiteInputs) -> dict:
    if model.bundle is None or not model.declared.principal_bundle:
        raise NotPrincipalBundle(f"model {model.name} has no principal bundle structure")
    g = om = fib = 0.0
    for x, p, c in inp.states:
        rep = gauge_formula_check(model, x, p, inp.t_grid, c, inp.cfg)
        g, om, fib = max(g, rep["gauge_sup"]), max(om, rep["omega_deviation"]), max(fib, rep["fiber_geodesic_sup"])
    res = {"gauge_sup": g, "omega_deviation": om, "fiber_geodesic_sup": fib}
    return _verdict("gauge", True, _observe(max(g, fib), inp.cfg.tolerances), res)


def suite_lcpb(model, inp: SuiteInputs) -> dict:
    if model.bundle is None or not model.declared.principal_bundle:
        raise NotPrincipalBundle(f"model {model.name} has no principal bundle structure")
    rep = lcpb_relations_check(model, n=20, seed=inp.seed)
    r = rep["residuals"]
    worst = max(r["hh"], r["xixi"], r["h_xi"], r["xi_h"])
    return _verdict("lcpb", True, _observe(worst, inp.cfg.tolerances), r, n_samples=rep["n_samples"])


RUNNERS = {
    "foliation": suite_foliation,
    "commute": suite_commute,
    "factorization": suite_factorization,
    "projection": suite_projection,
    "gauge": suite_gauge,
    "lcpb": suite_lcpb,
}


def applicable_suites(model) -> list[str]:
    out = ["foliation", "commute", "factorization"]
    if model.submersion is not None:
        out.append("projection")
    if model.bundle is not None and model.declared.principal_bundle:
        out += ["gauge", "lcpb"]
    return out


def run_suite(name: str, model, inp: SuiteInputs) -> dict:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or 'all'")
    return RUNNERS[name](model, inp)


# -- scalar residuals for convergence studies ---------------------------------------------
def ladder_residual(name: str, model, state, t: float, cfg: FlowConfig) -> float:
    """One scalar residual of ``name`` at a single state, for step-ladder studies."""
    x, p, c = state
    if name == "factorization":
        rep = factorization_check(model, x, p, (t,), c, cfg)
        return max(rep.primary_residuals + rep.alternate_residuals)
    if name == "commute":
        return max(flow_commutation_residual(model, PhaseState(x, p, c), t, t, cfg, ("h", "g")))
    if name == "projection":
        return projection_agreement(model, x, p, (t,), c, cfg, lift=False)["agreement_sup"]
    if name == "gauge":
        return gauge_formula_check(model, x, p, (t,), c, cfg)["gauge_sup"]
    if name == "geodesic":
        r = normal_geodesic_residual(model, PhaseState(x, p, c), t, "levi_civita", cfg)
        return max(r["velocity"], r["covariant"])
    raise ValueError(f"no convergence residual for suite {name!r}")


LADDER_SUITES = ("factorization", "commute", "projection", "gauge", "geodesic")
