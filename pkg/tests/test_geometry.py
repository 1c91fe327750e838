import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoflow import dual
from geoflow.dual import value
from geoflow.errors import DifferentiationError, MetricDegenerate
from geoflow.geometry import (
    bracket_field,
    bracket_generating_rank,
    check_spd,
    cocurvature,
    cometric_from_frame,
    curvature,
    curvature_tensors,
    flat,
    frame_gram,
    jacobi_residual,
    lie_bracket,
    orthonormal_basis,
    project,
    sharp,
)

box = arrays(float, 3, elements=st.floats(-1.0, 1.0, allow_nan=False))


def X(y):
    return np.stack([1.0 + 0.0 * y[0], 0.0 * y[0], -y[1] / 2])


def Y(y):
    return np.stack([0.0 * y[0], 1.0 + 0.0 * y[0], y[0] / 2])


@given(box)
def test_heisenberg_bracket_is_dz(x):
    np.testing.assert_allclose(lie_bracket(X, Y, x), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(lie_bracket(Y, X, x), [0, 0, -1], atol=1e-15)


def test_bracket_field_refuses_duals():
    F = bracket_field(X, Y)
    np.testing.assert_allclose(F(np.zeros(3)), [0, 0, 1])
    with pytest.raises(DifferentiationError):
        F(dual.seed(np.zeros(3)))


def test_jacobi_identity():
    Z = lambda y: np.stack([y[1] * y[2], np.sin(y[0]), y[0] * y[1]])
    assert jacobi_residual(X, Y, Z, np.array([0.2, -0.3, 0.5])) < 1e-7


@given(box)
@settings(max_examples=25)
def test_cometric_split_sums_to_inverse_metric(x):
    from geoflow import load_model

    for name in ("heisenberg", "warped_control"):
        m = load_model(name)
        S = value(m.h_star(x)) + value(m.v_star(x))
        np.testing.assert_allclose(S, np.linalg.inv(value(m.g(x))), atol=1e-10)


def test_sharp_flat_inverse(heis):
    x, v = np.array([0.3, -0.4, 0.1]), np.array([1.0, 2.0, -0.5])
    np.testing.assert_allclose(sharp(heis, x, flat(heis, x, v)), v, atol=1e-14)


def test_projections_are_complementary_idempotents(hopf):
    x = np.array([0.3, -0.2, 0.4])
    PH, PV = value(hopf.pr_h(x)), value(hopf.pr_v(x))
    np.testing.assert_allclose(PH @ PH, PH, atol=1e-14)
    np.testing.assert_allclose(PH + PV, np.eye(3), atol=1e-15)
    v = np.array([1.0, 0.5, -2.0])
    g = value(hopf.g(x))
    assert abs(project(hopf, x, v, "horizontal") @ g @ project(hopf, x, v, "vertical")) < 1e-14


def test_frames_orthonormal_and_bracket_generating(heis, hopf):
    for m in (heis, hopf):
        for x, c in m.sample_points(10, seed=3):
            np.testing.assert_allclose(frame_gram(m, x, c), np.eye(2), atol=1e-13)
            assert bracket_generating_rank(m, x, c) == 3
    E = orthonormal_basis(heis, np.zeros(3), 0, "vertical")
    np.testing.assert_allclose(np.abs(E[:, 0]), [0, 0, 1])


def test_cometric_from_frame_checks_rank(heis):
    cf = cometric_from_frame(heis, "horizontal", heis.sample_points(4))
    assert cf.rank == 2


def test_heisenberg_curvature():
    from geoflow import load_model

    m = load_model("heisenberg")
    x = np.array([0.4, 0.1, 0.0])
    Xv, Yv = value(X(x)), value(Y(x))
    # R(X, Y) = pr_V [X, Y] = d_z for every extension of the frame values
    for ext in ("constant", "frame", "affine"):
        np.testing.assert_allclose(curvature(m, Xv, Yv, x, extension=ext), [0, 0, 1], atol=1e-13)
    np.testing.assert_allclose(cocurvature(m, [0, 0, 1], [1, 0, 0], x), 0, atol=1e-15)
    R, Rbar = curvature_tensors(m, x)
    np.testing.assert_allclose(np.einsum("kij,i,j->k", R, Xv, Yv), [0, 0, 1], atol=1e-13)
    assert np.abs(Rbar).max() < 1e-14


def test_check_spd_rejects_degenerate():
    with pytest.raises(MetricDegenerate):
        check_spd(np.diag([1.0, 0.0]))
    with pytest.raises(MetricDegenerate):
        check_spd(np.array([[1.0, 1.0], [0.0, 1.0]]))
