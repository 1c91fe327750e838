import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoflow import dual
from geoflow.charts import EuclideanAtlas, StereographicAtlas
from geoflow.errors import OutOfChart

pt3 = arrays(float, 3, elements=st.floats(-1.9, 1.9, allow_nan=False)).filter(lambda u: 0.3 < np.linalg.norm(u) < 1.9)


@given(pt3)
def test_stereographic_round_trip(u):
    atlas = StereographicAtlas(3)
    v = atlas.transition(u, 0, 1)
    assert atlas.guard(v, 1) or np.linalg.norm(u) < 0.5
    np.testing.assert_allclose(atlas.transition(v, 1, 0), u, atol=1e-12)
    np.testing.assert_allclose(atlas.to_ambient(v, 1), atlas.to_ambient(u, 0), atol=1e-12)


@given(pt3)
def test_embedding_lies_on_sphere_and_jacobian_is_exact(u):
    atlas = StereographicAtlas(3, radius=0.5)
    P = atlas.to_ambient(u, 0)
    assert abs(np.linalg.norm(P) - 0.5) < 1e-14
    _, J = dual.jacobian(lambda y: atlas.to_ambient(y, 0), u)
    np.testing.assert_allclose(atlas.embedding_jacobian(u, 0), J, atol=1e-13)
    x, c = atlas.from_ambient(P)
    np.testing.assert_allclose(atlas.to_ambient(x, c), P, atol=1e-13)


def test_metric_factor_is_pullback_of_round_metric():
    atlas = StereographicAtlas(2, radius=2.0)
    u = np.array([0.3, -0.7])
    J = atlas.embedding_jacobian(u, 1)
    np.testing.assert_allclose(J.T @ J, atlas.metric_factor(u) * np.eye(2), atol=1e-13)


def test_transition_check_reports_round_trip_error():
    atlas = StereographicAtlas(3)
    pts = [(np.array([0.5, 0.2, -0.4]), 0), (np.array([1.5, 0.0, 0.1]), 1)]
    assert atlas.check(pts) < 1e-12


def test_choose_chart_hands_over_outside_unit_ball():
    atlas = StereographicAtlas(3)
    assert atlas.choose_chart(np.array([0.9, 0, 0]), 0) == 0
    assert atlas.choose_chart(np.array([1.1, 0, 0]), 0) == 1


def test_euclidean_guard():
    atlas = EuclideanAtlas(2, bound=10)
    assert atlas.guard(np.array([9.0, -10.0]), 0)
    with pytest.raises(OutOfChart, match=r"\|x\|_inf <= 10"):
        atlas.from_ambient([11.0, 0.0])
    with pytest.raises(OutOfChart):
        atlas.transition(np.zeros(2), 0, 1)


def test_guard_descriptions_name_the_chart():
    assert "chart 1" in StereographicAtlas(3).guard_description(1)
    assert "south" in StereographicAtlas(3).guard_description(1)
