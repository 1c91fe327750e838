import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoflow.connections import (
    LEVI_CIVITA,
    RNABLA,
    Connection,
    christoffel,
    covderiv,
    covderiv_metric,
    foliation_diagnostics,
    lie_derivative_metric,
    nabla_metric,
    parallel_transport,
    rnabla_coeffs,
    rnabla_torsion,
    second_fundamental_form,
    torsion_identity_residual,
)
from geoflow.dual import value

box = arrays(float, 3, elements=st.floats(-1.0, 1.0, allow_nan=False))
vec = arrays(float, 3, elements=st.floats(-2.0, 2.0, allow_nan=False))


def test_flat_christoffels_vanish(flat):
    assert np.abs(christoffel(flat, np.array([0.3, 0.2, -0.1]))).max() == 0.0
    assert np.abs(rnabla_coeffs(flat, np.zeros(3))).max() == 0.0


def test_warped_christoffels_at_origin(warped):
    G = christoffel(warped, np.zeros(3))
    assert G[2, 0, 2] == pytest.approx(1.0, abs=1e-14)
    assert G[2, 2, 0] == pytest.approx(1.0, abs=1e-14)
    assert G[0, 2, 2] == pytest.approx(-1.0, abs=1e-14)
    G[2, 0, 2] = G[2, 2, 0] = G[0, 2, 2] = 0.0
    assert np.abs(G).max() < 1e-14


@given(box)
@settings(max_examples=20)
def test_levi_civita_is_metric_and_torsion_free(x):
    from geoflow import load_model

    for name in ("warped_control", "heisenberg"):
        m = load_model(name)
        conn = Connection(m, LEVI_CIVITA)
        assert np.abs(nabla_metric(conn, x)).max() < 1e-12
        assert np.abs(conn.torsion(x)).max() < 1e-12


def test_heisenberg_rnabla_parallel_frame(heis):
    Xf = lambda y: heis.frame(y)[0][:, 0]
    Yf = lambda y: heis.frame(y)[0][:, 1]
    conn = Connection(heis, RNABLA)
    for x, _ in heis.sample_points(8):
        np.testing.assert_allclose(covderiv(conn, Xf, Xf, x, check_splitting=True), 0, atol=1e-13)
        Z = lambda y: heis.frame(y)[1][:, 0]
        np.testing.assert_allclose(covderiv(conn, Z, Xf, x), 0, atol=1e-13)
        np.testing.assert_allclose(covderiv(conn, Xf, Yf, x), 0, atol=1e-13)


def test_four_term_formula_matches_coefficients(hopf):
    x = np.array([0.2, -0.3, 0.5])
    conn = Connection(hopf, RNABLA)
    G = conn.coeffs(x)
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    Xf = lambda y: A @ y + 1.0
    Yf = lambda y: B @ y - 0.5
    direct = covderiv(conn, Xf, Yf, x)
    Xv, Yv = Xf(x), Yf(x)
    np.testing.assert_allclose(direct, B @ Xv + np.einsum("kij,i,j->k", G, Xv, Yv), atol=1e-12)


def test_heisenberg_torsion_of_frame_pair(heis):
    FH, _ = heis.frame(np.zeros(3))
    T = rnabla_torsion(heis, FH[:, 0], FH[:, 1], np.zeros(3))
    np.testing.assert_allclose(T, [0, 0, -1], atol=1e-14)
    np.testing.assert_allclose(rnabla_torsion(heis, FH[:, 0], FH[:, 0], np.zeros(3)), 0, atol=1e-15)


@given(vec, vec)
@settings(max_examples=30, deadline=None)
def test_torsion_identity(v, w):
    from geoflow import load_model

    for name in ("heisenberg", "warped_control", "hopf_s3"):
        m = load_model(name)
        assert torsion_identity_residual(m, v, w, np.array([0.3, -0.1, 0.2])) <= 1e-7 * max(1.0, np.linalg.norm(v) * np.linalg.norm(w))


def test_warped_rnabla_metric(warped):
    conn = Connection(warped, RNABLA)
    for a in (0.0, 0.4, -0.7):
        x = np.array([a, 0.2, 1.0])
        ez, ex = np.eye(3)[2], np.eye(3)[0]
        assert covderiv_metric(conn, ex, ez, ez, x) == pytest.approx(2 * np.exp(2 * a), rel=1e-13)
        assert abs(covderiv_metric(Connection(warped, LEVI_CIVITA), ex, ez, ez, x)) < 1e-13


def test_second_fundamental_form(warped, heis, flat):
    ez = np.eye(3)[2]
    np.testing.assert_allclose(second_fundamental_form(warped, ez, ez, np.zeros(3)), [-1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(second_fundamental_form(heis, ez, ez, np.array([0.3, 0.2, 0.0])), 0, atol=1e-14)
    np.testing.assert_allclose(second_fundamental_form(flat, ez, ez, np.zeros(3)), 0, atol=1e-15)


def test_second_fundamental_form_against_lie_derivative(warped):
    x = np.array([0.3, -0.2, 0.5])
    ez, ex = np.eye(3)[2], np.eye(3)[0]
    L = lie_derivative_metric(warped, lambda y: ex + 0.0 * y, x)
    II = second_fundamental_form(warped, ez, ez, x)
    assert L[2, 2] == pytest.approx(-2 * ex @ value(warped.g(x)) @ II, rel=1e-12)


@pytest.mark.parametrize(
    "name, expected",
    [
        ("heisenberg", dict(totally_geodesic=True, riemannian_foliation=True, rnabla_parallel=True)),
        ("flat_split", dict(totally_geodesic=True, riemannian_foliation=True, rnabla_parallel=True)),
        ("warped_control", dict(totally_geodesic=False, riemannian_foliation=True, rnabla_parallel=False)),
        ("hopf_s3", dict(totally_geodesic=True, riemannian_foliation=True, rnabla_parallel=True)),
    ],
)
def test_foliation_verdicts(name, expected):
    from geoflow import load_model

    m = load_model(name)
    rep = foliation_diagnostics(m, n=8)
    for k, v in expected.items():
        assert rep.verdicts[k] is v
    assert rep.decomposition_ok
    assert rep.mismatches(m.declared) == []
    assert rep.rnabla_g_residual <= rep.tg_residual + rep.rf_residual + 1e-8


def test_transport_along_great_circle_is_isometric(hopf):
    # great circle through the chart-0 origin (south pole) in the (e1, e4) plane
    atlas = hopf.atlas

    def curve(t):
        P = np.array([np.sin(t), 0.0, 0.0, -np.cos(t)])
        x, c = atlas.from_ambient(P)
        dP = np.array([np.cos(t), 0.0, 0.0, np.sin(t)])
        J = atlas.embedding_jacobian(x, c)
        return x, np.linalg.lstsq(J, dP, rcond=None)[0], c

    times = np.linspace(0, 1.0, 201)
    v0 = np.array([0.0, 1.0, 0.5])
    res = parallel_transport(Connection(hopf, LEVI_CIVITA), curve, times, v0)
    g0 = v0 @ value(hopf.g(res.points[0], int(res.charts[0]))) @ v0
    g1 = res.vectors[-1] @ value(hopf.g(res.points[-1], int(res.charts[-1]))) @ res.vectors[-1]
    assert abs(g1 - g0) < 1e-9
