import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoflow.serialize import csv_text, dumps, write_csv, write_json
from geoflow.studies import classify, convergence_study, fit_order


@given(st.floats(0.5, 6.0), st.floats(1e-3, 1e3))
def test_fit_order_recovers_power_law(order, const):
    steps = [4e-3, 2e-3, 1e-3]
    assert fit_order(steps, [const * h**order for h in steps]) == pytest.approx(order, abs=1e-9)


def test_classification():
    assert classify([1e-15, 2e-15, 1e-15], 0.1) == "roundoff floor"
    assert classify([0.7, 0.7, 0.7], 0.0) == "non-vanishing limit"
    assert classify([1e-6, 6e-8, 4e-9], 4.0) == "converging at order 4.00"


def test_study_validates_ladder():
    with pytest.raises(ValueError, match="at least 3"):
        convergence_study(lambda h: h, [1e-3])
    with pytest.raises(ValueError, match="positive"):
        convergence_study(lambda h: h, [1e-3, 0.0, -1.0])
    s = convergence_study(lambda h: 3 * h**4, [4e-3, 2e-3, 1e-3], "toy")
    assert s.order == pytest.approx(4.0)
    table = s.table()
    assert table.splitlines()[0] == "toy" and "fitted order: 4.000" in table
    assert json.loads(dumps(s.to_dict()))["steps"] == [4e-3, 2e-3, 1e-3]


def test_json_is_stable_and_safe(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), np.array([1.0, np.inf])], "c": np.bool_(True)}
    text = dumps(obj)
    assert text == dumps(dict(reversed(list(obj.items()))))
    assert json.loads(text) == {"a": [2, [1.0, "inf"]], "b": 1.5, "c": True}
    path = write_json(tmp_path / "sub" / "r.json", obj)
    assert path.read_text() == text
    assert [p.name for p in path.parent.iterdir()] == ["r.json"]


def test_csv_is_rfc4180(tmp_path):
    text = csv_text(["t", "label"], [[0.1, "a,b"], [np.float64(1 / 3), 'say "hi"']])
    assert text == 't,label\r\n0.1,"a,b"\r\n0.3333333333333333,"say ""hi"""\r\n'
    assert write_csv(tmp_path / "x.csv", ["t"], [[1.0]]).read_bytes() == b"t\r\n1.0\r\n"
