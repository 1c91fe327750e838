"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line and records its parts; the terminal summary
repeats one line per criterion.  Positive models must satisfy the identities to
integrator accuracy and the warped control must violate them.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ACCEPTANCE
from geoflow import FlowConfig, algebra
from geoflow.bundles import gauge_formula_check, lcpb_relations_check
from geoflow.cli import main
from geoflow.connections import LEVI_CIVITA, RNABLA, foliation_diagnostics, foliation_point_residuals, torsion_identity_residual
from geoflow.dual import value
from geoflow.exponential import exp_r, factorization_check, horizontal_lift, projection_agreement
from geoflow.hamiltonian import PhaseState, normal_geodesic_residual, poisson_bracket
from geoflow.studies import fit_order

STEP = 1e-3
LADDER = (4e-3, 2e-3, 1e-3)
P0 = np.array([1.0, 0.0, 1.0])


def record(crit, part, ok, detail):
    ACCEPTANCE.setdefault(crit, []).append((part, bool(ok), detail))
    print(f"criterion {crit} [{part}]: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def check(crit, parts):
    """Record ``(part, ok, detail)`` triples, print the criterion line, then assert."""
    for part in parts:
        record(crit, *part)
    ok = all(p[1] for p in parts)
    print(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
    assert ok, [p for p in parts if not p[1]]


def covectors(model, n, seed=2024, norm=2.0):
    if model.name == "heisenberg":
        # the canonical test covector first, then seeded random ones
        return [(np.zeros(3), P0, 0)] + model.random_states(n - 1, seed, norm)
    return model.random_states(n, seed, norm)


# -- 1 ---------------------------------------------------------------------------------------
@pytest.mark.parametrize("name, limit", [("heisenberg", 60), ("flat_split", 60), ("hopf_s3", 60), ("octonionic_hopf", 600)])
def test_criterion_1_bracket_and_parallel_metric(request, name, limit):
    model = request.getfixturevalue({"heisenberg": "heis", "flat_split": "flat", "hopf_s3": "hopf", "octonionic_hopf": "octo"}[name])
    start = time.perf_counter()
    pb = max(abs(poisson_bracket(model, "h", "v", x, p, c)) for x, p, c in model.random_states(100, seed=1))
    rep = foliation_diagnostics(model, n=100, trace=False, seed=1)
    elapsed = time.perf_counter() - start
    check(
        1,
        [
            (f"{name} sup|{{Hh,Hv}}|", pb <= 1e-7, f"{pb:.2e} over 100 states"),
            (f"{name} sup|rnabla g|", rep.rnabla_g_residual <= 1e-7, f"{rep.rnabla_g_residual:.2e} over {rep.n_samples} samples"),
            (f"{name} runtime", elapsed <= limit, f"{elapsed:.1f}s (limit {limit}s)"),
        ],
    )


# -- 2 ---------------------------------------------------------------------------------------
def test_criterion_2_warped_bracket_and_tg(warped):
    pb = poisson_bracket(warped, "h", "v", np.zeros(3), P0)
    tg = foliation_point_residuals(warped, np.zeros(3), trace=False)["tg"]
    check(2, [("{Hh,Hv}(0,(1,0,1))", abs(pb - 1) <= 1e-9, f"{pb!r}"), ("tg_residual(0)", abs(tg - 2) <= 1e-9, f"{tg!r}")])


# -- 3 ---------------------------------------------------------------------------------------
def _factorization_ladder(model, x, p, c):
    prim, alt = [], []
    for h in LADDER:
        rep = factorization_check(model, x, p, (1.0,), c, FlowConfig(step=h))
        prim.append(rep.primary_residuals[0])
        alt.append(rep.alternate_residuals[0])
    return prim, alt


@pytest.mark.parametrize("name", ["heisenberg", "hopf_s3"])
def test_criterion_3_factorization(request, name):
    model = request.getfixturevalue("heis" if name == "heisenberg" else "hopf")
    cfg = FlowConfig(step=STEP)
    prim = alt = 0.0
    for x, p, c in covectors(model, 10):
        rep = factorization_check(model, x, p, (1.0,), c, cfg)
        prim = max(prim, rep.primary_residuals[0])
        alt = max(alt, rep.alternate_residuals[0])
    parts = [(f"{name} primary t=1", prim <= 1e-6, f"{prim:.2e} over 10 covectors"), (f"{name} alternate t=1", alt <= 1e-6, f"{alt:.2e}")]
    if name == "hopf_s3":
        for k, (x, p, c) in enumerate(covectors(model, 3)):
            lp, la = _factorization_ladder(model, x, p, c)
            op, oa = fit_order(LADDER, lp), fit_order(LADDER, la)
            parts.append((f"hopf_s3 order covector {k}", 3.5 <= op <= 4.5 and 3.5 <= oa <= 4.5, f"primary {op:.2f}, alternate {oa:.2f} ({lp[0]:.1e} -> {lp[-1]:.1e})"))
    check(3, parts)


@pytest.mark.xfail(
    strict=True,
    reason="on heisenberg RK4 reproduces the factorization exactly (the vertical flow is a z-translation "
    "commuting with every RK4 map), so residuals sit at roundoff for every step and no order can be fitted",
)
def test_criterion_3_heisenberg_convergence_order(heis):
    lp, la = _factorization_ladder(heis, np.zeros(3), P0, 0)
    order = fit_order(LADDER, lp)
    ok = 3.5 <= order <= 4.5
    record(3, "heisenberg order", ok, f"fitted {order:.2f} on residuals {', '.join(f'{r:.1e}' for r in lp)} (roundoff floor, not identifiable)")
    assert ok


def test_criterion_3_octonionic(octo):
    start = time.perf_counter()
    worst = 0.0
    for x, p, c in covectors(octo, 5):
        rep = factorization_check(octo, x, p, (1.0,), c, FlowConfig(step=STEP))
        worst = max(worst, rep.primary_residuals[0], rep.alternate_residuals[0])
    elapsed = time.perf_counter() - start
    check(3, [("octonionic_hopf t=1", worst <= 1e-5, f"{worst:.2e} over 5 covectors"), ("octonionic_hopf runtime", elapsed <= 900, f"{elapsed:.0f}s")])


# -- 4 ---------------------------------------------------------------------------------------
def test_criterion_4_factorization_negative_control(warped):
    lp, la = _factorization_ladder(warped, np.zeros(3), P0, 0)
    slope = fit_order(LADDER, lp)
    check(
        4,
        [
            ("warped residual t=1", min(lp) >= 1e-3, f"{lp[-1]:.4f} (alternate {la[-1]:.4f})"),
            ("step independence", abs(slope) <= 0.5, f"slope {slope:.2e}"),
        ],
    )


# -- 5 ---------------------------------------------------------------------------------------
@pytest.mark.parametrize("name", ["heisenberg", "hopf_s3"])
def test_criterion_5_projection_agreement(request, name):
    model = request.getfixturevalue("heis" if name == "heisenberg" else "hopf")
    agree = lift = 0.0
    for x, p, c in covectors(model, 10, norm=1.0):
        r = projection_agreement(model, x, p, chart=c, cfg=FlowConfig(step=STEP))
        agree, lift = max(agree, r["agreement_sup"]), max(lift, r["lift_sup"])
    check(5, [(f"{name} projection", agree <= 1e-6, f"{agree:.2e}"), (f"{name} horizontal lift", lift <= 1e-6, f"{lift:.2e}")])


def test_criterion_5_warped_disagreement(warped):
    r = projection_agreement(warped, np.zeros(3), P0, (1.0,), cfg=FlowConfig(step=STEP), lift=False)
    check(5, [("warped disagreement t=1", r["agreement_sup"] >= 5e-3, f"{r['agreement_sup']:.4f}")])


# -- 6 ---------------------------------------------------------------------------------------
def test_criterion_6_normal_geodesic_equation(heis):
    states = [PhaseState(np.zeros(3), P0)] + [PhaseState(x, p, c) for x, p, c in heis.random_states(4, seed=6, norm=3.0)]
    parts = []
    for kind in (LEVI_CIVITA, RNABLA):
        worst = 0.0
        for st in states:
            r = normal_geodesic_residual(heis, st, 1.0, kind, FlowConfig(step=STEP))
            worst = max(worst, r["velocity"], r["covariant"])
        parts.append((f"{kind} step 1e-3", worst <= 1e-6, f"{worst:.2e}"))
        # truncation must dominate roundoff for a slope, hence the coarser ladder
        ladder = (4e-2, 2e-2, 1e-2)
        orders = []
        for st in states[1:3]:
            res = []
            for h in ladder:
                r = normal_geodesic_residual(heis, st, 1.0, kind, FlowConfig(step=h))
                res.append(max(r["velocity"], r["covariant"]))
            orders.append(fit_order(ladder, res))
        parts.append((f"{kind} order", min(orders) >= 3.5, ", ".join(f"{o:.2f}" for o in orders)))
    check(6, parts)


# -- 7 ---------------------------------------------------------------------------------------
def test_criterion_7_gauge_and_lcpb(hopf):
    gauge = omega = 0.0
    for x, p, c in covectors(hopf, 10):
        r = gauge_formula_check(hopf, x, p, (1.0,), c, FlowConfig(step=STEP))
        gauge, omega = max(gauge, r["gauge_sup"]), max(omega, r["omega_deviation"])
    lc = lcpb_relations_check(hopf, n=20)["residuals"]
    worst = max(lc["hh"], lc["xixi"], lc["h_xi"], lc["xi_h"])
    check(
        7,
        [
            ("gauge formula", gauge <= 1e-6, f"{gauge:.2e} over 10 covectors"),
            ("omega(gamma') deviation", omega <= 1e-8, f"{omega:.2e}"),
            ("four Levi-Civita relations", worst <= 1e-6, f"{worst:.2e} at 20 samples"),
        ],
    )


# -- 8 ---------------------------------------------------------------------------------------
def test_criterion_8_structural(heis, warped, hopf, octo):
    parts = []
    iso = 0.0
    for m in (heis, warped, hopf):
        for x, p, c in m.random_states(3, seed=8):
            E = np.eye(3)
            t = 2.0
            r = exp_r(m, x, value(m.g_star(x, c)) @ p, t, c, FlowConfig(step=STEP), transport=E)
            G0 = E.T @ value(m.g(x, c)) @ E
            G1 = r.transported.T @ value(m.g(r.x, r.chart)) @ r.transported
            iso = max(iso, float(np.abs(G1 - G0).max()) / t)
    parts.append(("transport isometry", iso <= 1e-9, f"{iso:.2e} per unit time"))

    rng = np.random.default_rng(8)
    tor = split = 0.0
    for m in (heis, warped, hopf, octo):
        for x, c in m.sample_points(100, seed=8, include_interesting=False):
            v, w = rng.standard_normal((2, m.dim))
            tor = max(tor, torsion_identity_residual(m, v / np.linalg.norm(v), w / np.linalg.norm(w), x, c))
            S = value(m.h_star(x, c)) + value(m.v_star(x, c)) - value(m.g_star(x, c))
            split = max(split, float(np.abs(S).max()))
    parts.append(("torsion identity", tor <= 1e-7, f"{tor:.2e} at 100 samples per model"))
    parts.append(("g* = h* + v*", split <= 1e-10, f"{split:.2e}"))

    U, V = rng.standard_normal((2, 10_000, 8))
    comp = max(abs(algebra.norm(algebra.multiply(u, v)) - algebra.norm(u) * algebra.norm(v)) for u, v in zip(U, V))
    parts.append(("octonion norm composition", comp <= 1e-12, f"{comp:.2e} at 10^4 pairs"))

    def circle(t):
        return np.array([np.cos(t) - 1.0, np.sin(t)]), np.array([-np.sin(t), np.cos(t)])

    area = quad(lambda t: 0.5 * (circle(t)[0][0] * circle(t)[1][1] - circle(t)[0][1] * circle(t)[1][0]), 0, 2 * np.pi)[0]
    lift = horizontal_lift(heis, circle, np.linspace(0, 2 * np.pi, 9), np.zeros(3), cfg=FlowConfig(step=STEP))
    z = lift.x[-1][2]
    parts.append(("heisenberg unit-circle holonomy", abs(z - np.pi) <= 1e-6 and abs(area - np.pi) <= 1e-12, f"z = {z:.10f}"))
    check(8, parts)


# -- 9 ---------------------------------------------------------------------------------------
def test_criterion_9_determinism(tmp_path):
    paths = []
    for run in ("first", "second"):
        assert main(["verify", "all", "--model", "heisenberg", "--seed", "7", "--out", str(tmp_path / run)]) == 0
        paths.append(tmp_path / run / "verify_all_heisenberg.json")
    a, b = (p.read_bytes() for p in paths)
    check(9, [("byte-identical reports", a == b, f"{len(a)} bytes")])
