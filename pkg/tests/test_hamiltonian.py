import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoflow import FlowConfig
from geoflow.connections import LEVI_CIVITA, RNABLA
from geoflow.errors import ChartExhausted, OutOfChart
from geoflow.hamiltonian import (
    PhaseState,
    flow,
    flow_commutation_residual,
    flow_to,
    hamiltonian,
    hamiltonian_vector_field,
    integrate,
    normal_geodesic_residual,
    poisson_bracket,
    state_distance,
    to_chart,
    vector_field_cross_check,
    vertical_flow_check,
)

box = arrays(float, 3, elements=st.floats(-1.0, 1.0, allow_nan=False))
cov = arrays(float, 3, elements=st.floats(-2.0, 2.0, allow_nan=False))
COARSE = FlowConfig(step=1e-2)


def heisenberg_geodesic(t, a=1.0):
    """Normal geodesic from 0 with p = (1, 0, a), a != 0."""
    return np.array([np.sin(a * t) / a, (1 - np.cos(a * t)) / a, (t - np.sin(a * t) / a) / (2 * a)])


def test_hamiltonian_values(flat, heis):
    assert hamiltonian(flat, "g", PhaseState(np.zeros(3), [3.0, 4.0, 0.0])) == 12.5
    assert hamiltonian(heis, "h", PhaseState(np.zeros(3), [0.0, 0.0, 1.0])) == 0.0


def test_vector_fields_by_hand(flat, heis, warped):
    xd, pd = hamiltonian_vector_field(flat, "g", np.ones(3), [1.0, -2.0, 0.5])
    np.testing.assert_array_equal(xd, [1.0, -2.0, 0.5])
    np.testing.assert_array_equal(pd, 0.0)
    xd, pd = hamiltonian_vector_field(warped, "v", np.zeros(3), [1.0, 0.0, 1.0])
    np.testing.assert_allclose(xd, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(pd, [1, 0, 0], atol=1e-15)
    xd, _ = hamiltonian_vector_field(heis, "h", np.zeros(3), [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(xd, 0.0)


@given(box, cov)
@settings(max_examples=30, deadline=None)
def test_split_vector_field_agrees_with_canonical(x, p):
    from geoflow import load_model

    for name in ("heisenberg", "warped_control"):
        m = load_model(name)
        for which in ("h", "v", "g"):
            assert vector_field_cross_check(m, which, x, p) <= 1e-7 * max(1.0, p @ p)


def test_warped_bracket_by_hand(warped):
    assert poisson_bracket(warped, "h", "v", np.zeros(3), [1.0, 0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)
    for a in (0.3, -0.5):
        x, p = np.array([a, 0.1, 0.2]), np.array([0.7, 0.4, -1.2])
        assert poisson_bracket(warped, "h", "v", x, p) == pytest.approx(p[0] * np.exp(-2 * a) * p[2] ** 2, rel=1e-12)


@given(box, cov)
@settings(max_examples=40, deadline=None)
def test_bracket_antisymmetry_and_vanishing_on_heisenberg(x, p):
    from geoflow import load_model

    m = load_model("heisenberg")
    assert poisson_bracket(m, "h", "h", x, p) == 0.0
    assert poisson_bracket(m, "h", "g", x, p) == pytest.approx(-poisson_bracket(m, "g", "h", x, p), abs=1e-14)
    assert abs(poisson_bracket(m, "h", "v", x, p)) <= 1e-9 * max(1.0, p @ p) ** 1.5


def test_straight_lines(flat, heis):
    s = flow_to(flat, "g", PhaseState(np.zeros(3), [1.0, 0.0, 0.0]), 2.0, COARSE)
    np.testing.assert_allclose(s.x, [2, 0, 0], atol=1e-14)
    s = flow_to(heis, "h", PhaseState(np.zeros(3), [1.0, 0.0, 0.0]), 1.5, COARSE)
    np.testing.assert_allclose(s.x, [1.5, 0, 0], atol=1e-14)


def test_heisenberg_closed_form_geodesic(heis):
    traj = integrate(heis, "h", PhaseState(np.zeros(3), [1.0, 0.0, 1.0]), [0.0, 0.25, 0.5, 1.0])
    for i, t in enumerate((0.0, 0.25, 0.5, 1.0)):
        np.testing.assert_allclose(traj.at_grid(i).x, heisenberg_geodesic(t), atol=1e-12)
    assert traj.energy_drift < 1e-12
    assert np.all(np.diff(traj.t) > 0)


def test_great_circle_closes_across_charts(hopf):
    x, p, c = hopf.random_states(1, seed=4)[0]
    traj = flow(hopf, "g", PhaseState(x, p, c), 2 * np.pi)
    end = traj.final
    assert hopf.distance(end.x, end.chart, x, c) < 1e-6
    assert len(traj.switches) >= 1
    back = to_chart(hopf, end, c)
    np.testing.assert_allclose(back.p, p, atol=1e-6)


@pytest.mark.parametrize("integrator, tol", [("rk45_adaptive", 1e-8), ("implicit_midpoint", 1e-4)])
def test_integrators_agree(heis, integrator, tol):
    cfg = FlowConfig(integrator=integrator, step=1e-3)
    s = flow_to(heis, "h", PhaseState(np.zeros(3), [1.0, 0.0, 1.0]), 1.0, cfg)
    np.testing.assert_allclose(s.x, heisenberg_geodesic(1.0), atol=tol)


def test_chart_budget_and_guard(hopf, warped):
    x, p, c = hopf.random_states(1, seed=4)[0]
    with pytest.raises(ChartExhausted):
        flow(hopf, "g", PhaseState(x, p, c), 2 * np.pi, FlowConfig(step=1e-2, max_chart_switches=0))
    with pytest.raises(OutOfChart, match="guard"):
        flow(warped, "g", PhaseState(np.zeros(3), [60.0, 0.0, 0.0]), 3.0, COARSE)


def test_trajectory_csv(tmp_path, heis):
    traj = flow(heis, "h", PhaseState(np.zeros(3), [1.0, 0.0, 1.0]), 0.1, COARSE)
    path = traj.to_csv(tmp_path / "t.csv")
    lines = path.read_bytes().split(b"\r\n")
    assert lines[0] == b"t,x1,x2,x3,p1,p2,p3,chart_id,H"
    assert len([ln for ln in lines if ln]) == 12
    summary = traj.summary()
    assert summary["n_records"] == 11 and summary["chart_switches"] == []


def test_commutation(flat, heis, warped):
    s0 = PhaseState(np.zeros(3), [1.0, 0.0, 1.0])
    assert max(flow_commutation_residual(flat, PhaseState(np.ones(3), [0.3, -1.0, 2.0]), 1.0, 1.0, COARSE)) < 1e-13
    assert max(flow_commutation_residual(heis, s0, 1.0, 1.0)) <= 1e-6
    assert max(flow_commutation_residual(heis, s0, 1.0, 1.0, pair=("h", "v"))) <= 1e-6
    assert flow_commutation_residual(warped, s0, 1.0, 1.0, COARSE)[0] > 0.01


def test_state_distance_is_chart_invariant(hopf):
    x, p, c = hopf.random_states(1, seed=2)[0]
    a = PhaseState(x, p, c)
    b = to_chart(hopf, a, 1 - c)
    d = state_distance(hopf, a, b)
    assert d[0] < 1e-14 and d[1] < 1e-12


@pytest.mark.parametrize("kind", [LEVI_CIVITA, RNABLA])
def test_normal_geodesic_equation(flat, heis, kind):
    r = normal_geodesic_residual(flat, PhaseState(np.zeros(3), [1.0, 2.0, 3.0]), 1.0, kind, COARSE)
    assert r["velocity"] < 1e-12 and r["covariant"] < 1e-12
    r = normal_geodesic_residual(heis, PhaseState(np.zeros(3), [1.0, 0.0, 1.0]), 1.0, kind)
    assert r["velocity"] <= 1e-6 and r["covariant"] <= 1e-6


def test_vertical_flows(flat, heis, hopf):
    r = vertical_flow_check(flat, PhaseState(np.ones(3), [1.0, 1.0, 1.0]), 1.0, COARSE)
    assert max(r["velocity"], r["rnabla_parallel"], r["levi_civita_parallel"]) < 1e-12
    traj = flow(heis, "v", PhaseState(np.zeros(3), [0.0, 0.0, 1.0]), 1.0, COARSE)
    np.testing.assert_allclose(traj.final.x, [0, 0, 1], atol=1e-15)
    np.testing.assert_array_equal(traj.final.p, [0, 0, 1])
    r = vertical_flow_check(heis, PhaseState(np.zeros(3), [0.0, 0.0, 1.0]), 1.0, COARSE)
    assert max(r["velocity"], r["rnabla_parallel"]) <= 1e-9
    x, p, c = hopf.canonical_states[0]
    r = vertical_flow_check(hopf, PhaseState(x, p, c), 1.0)
    assert r["fiber_drift"] <= 1e-7 and r["rnabla_parallel"] <= 1e-6


def test_vertical_flow_is_not_parallel_on_warped_control(warped):
    r = vertical_flow_check(warped, PhaseState(np.zeros(3), [1.0, 0.0, 1.0]), 1.0, COARSE)
    assert r["rnabla_parallel"] > 0.1
