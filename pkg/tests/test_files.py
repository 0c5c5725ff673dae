from __future__ import annotations

import json

import numpy as np
import pytest

from idesing import files
from idesing.desingularization import DesingMap, lift_system
from idesing.ide import make_system
from idesing.parsing import parse_polynomial as P
from idesing.polynomial import PolynomialMap
from idesing.solver import IntegrationOptions, integrate
from idesing.sphere import build_full_system

MODEL = {
    "name": "osc",
    "variables": ["x", "y"],
    "parameters": {"k": "3/2"},
    "a": [["1", "0"], ["0", "1"]],
    "f": ["y", "-k*x"],
}


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


def test_model_round_trip(tmp_path, sphere):
    s = files.load_model(_write(tmp_path, "m.json", MODEL))
    assert s.name == "osc" and s.f[1] == P("-3/2*x", ("x", "y"))
    again = files.model_from_dict(files.model_to_dict(s))
    assert again == s
    assert files.model_from_dict(files.model_to_dict(sphere)) == sphere


@pytest.mark.parametrize(
    "bad",
    [
        "{not json",
        "[1, 2]",
        json.dumps({"variables": ["x"], "a": [["1"]]}),
        json.dumps({"variables": ["x"], "a": [["1"]], "f": ["x +"]}),
        json.dumps({"variables": ["x"], "a": [["1", "0"]], "f": ["x"]}),
        json.dumps({"variables": ["x"], "a": [["q"]], "f": ["x"]}),
        json.dumps({"variables": ["x"], "a": [["k"]], "f": ["x"], "parameters": {"k": "one"}}),
    ],
)
def test_bad_models(tmp_path, bad):
    with pytest.raises(files.ModelFileError):
        files.load_model(_write(tmp_path, "bad.json", bad))


def test_missing_file(tmp_path):
    with pytest.raises(files.ModelFileError):
        files.load_model(tmp_path / "nope.json")


def test_map_and_constraints(tmp_path):
    m = files.load_map(_write(tmp_path, "map.json", {"domain_variables": ["y"], "components": ["0", "y"], "constraints": ["y^2 - c"], "parameters": {"c": 2}}))
    assert m.map.arity == 2 and m.source_constraints.generators[0] == P("y^2 - 2", ("y",))
    assert files.map_from_dict(files.map_to_dict(m)).map == m.map
    c = files.load_constraints(_write(tmp_path, "c.json", {"constraints": ["x^2 + y^2 - 1"]}), ("x", "y"))
    assert len(c) == 1
    with pytest.raises(files.ModelFileError):
        files.load_constraints(_write(tmp_path, "c2.json", {"variables": ["a"], "constraints": ["a"]}), ("x", "y"))


def test_lifted_model_has_lineage():
    s = make_system(["x1", "x2"], [[1, 0], [0, 0]], ["x2", "x1"], "dae")
    l = lift_system(s, DesingMap(PolynomialMap(("y",), [P("0", ("y",)), P("y", ("y",))])), map_file="map.json")
    d = files.lifted_to_dict(l)
    assert d["lineage"] == {"level": 1, "parent_name": "dae", "map_file": "map.json"}
    assert d["f"] == ["y", "0"]


def test_csv_round_trip(tmp_path):
    s = make_system(["x"], [["x"]], ["1"], "imp")
    tr = integrate(s, [1.0], IntegrationOptions(step=1e-2, t_span=(0, -1)))
    path = tmp_path / "t.csv"
    files.write_trajectory_csv(tr, path)
    text = path.read_text().splitlines()
    assert text[0] == "t,x,residual,constraint_norm,rank_a,rank_af"
    assert text[-1] == "# segment imp rank_event"
    back = files.read_trajectory_csv(path)
    np.testing.assert_array_equal(back.states, tr.states)
    np.testing.assert_array_equal(back.times, tr.times)
    assert back.termination == "rank_event"


def test_csv_extra_columns():
    s = make_system(["x"], [[1]], ["1"], "c")
    tr = integrate(s, [0.0], IntegrationOptions(step=0.5, t_span=(0, 1)))
    text = files.format_trajectory_csv(tr, [{"double": 2 * tr.states[:, 0]}])
    head, row = text.splitlines()[:2]
    assert head.endswith("rank_af,double") and row.split(",")[-1] == "0"
