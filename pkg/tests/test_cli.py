from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
import pytest

from idesing import files
from idesing.cli import main
from idesing.sphere import chart_embed_many

IMPASSE = {"name": "impasse", "variables": ["x"], "a": [["x"]], "f": ["1"]}
UNIT = {"name": "unit", "variables": ["x"], "a": [["1"]], "f": ["1"]}
ODE = {"name": "rot", "variables": ["x1", "x2"], "a": [["1", "0"], ["0", "1"]], "f": ["-x2", "x1"]}
DAE = {"name": "dae", "variables": ["x1", "x2"], "a": [["1", "0"], ["0", "0"]], "f": ["x2", "x1"]}


@pytest.fixture
def write(tmp_path):
    def _w(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)

    return _w


@pytest.fixture
def sphere_model(tmp_path):
    path = tmp_path / "sphere.json"
    assert main(["sphere", "--mode", "full", "--out", str(path)]) == 0
    return str(path)


def test_stratify_sphere(sphere_model, tmp_path):
    out = tmp_path / "r.json"
    assert main(["stratify", sphere_model, "--samples", "2000", "--out", str(out)]) == 0
    r = json.loads(out.read_text())
    assert r["ranks"] == [3, 4] and r["case"] == "b" and len(r["m0_generator_families"]) == 1


def test_stratify_ode_and_bad_json(write, tmp_path):
    out = tmp_path / "r.json"
    assert main(["stratify", write("ode.json", ODE), "--out", str(out)]) == 0
    r = json.loads(out.read_text())
    assert r["case"] == "c" and r["m0_generator_families"] == []
    assert main(["stratify", write("bad.json", "{oops")]) == 2
    assert main(["stratify", str(tmp_path / "missing.json")]) == 2


def test_classify(write, sphere_model, capsys):
    assert main(["classify", sphere_model, "--point", "0,0,1,1,0,0,0"]) == 0
    # f(x) = (0, 1, 0, ...) lies in the range of a(x) here, so both ranks are 3
    assert capsys.readouterr().out.strip() == "M0 rank_a=3 rank_af=3"
    imp = write("imp.json", IMPASSE)
    assert main(["classify", imp, "--point", "1"]) == 0
    assert capsys.readouterr().out.strip() == "M2 rank_a=1 rank_af=1"
    assert main(["classify", imp, "--point", "0"]) == 0
    assert capsys.readouterr().out.strip() == "M0 rank_a=0 rank_af=1"
    assert main(["classify", imp, "--point", "1,2"]) == 2
    assert main(["classify", imp, "--point", "abc"]) == 2


def test_integrate_unit(write, tmp_path):
    out = tmp_path / "u.csv"
    assert main(["integrate", write("u.json", UNIT), "--x0", "0", "--t1", "1", "--out", str(out)]) == 0
    tr = files.read_trajectory_csv(out)
    assert tr.times[-1] == 1.0 and abs(tr.final_state[0] - 1) < 1e-10
    assert out.read_text().splitlines()[-1] == "# segment unit completed"


def test_integrate_homogeneous_impasse(write, tmp_path):
    out = tmp_path / "h.csv"
    rc = main(["integrate", write("imp.json", IMPASSE), "--x0", "1", "--homogeneous", "--arc", "-3", "--step", "1e-3", "--out", str(out)])
    assert rc == 0
    tr = files.read_trajectory_csv(out)
    x, t = tr.states[:, 0], tr.states[:, 1]
    assert np.max(np.abs(x**2 - 2 * t - 1)) < 1e-8 and x.min() < 0
    assert abs(t[np.argmin(np.abs(x))] + 0.5) < 1e-5


def test_integrate_with_projection(write, tmp_path):
    out = tmp_path / "p.csv"
    c = write("c.json", {"constraints": ["x1^2 + x2^2 - 1"]})
    assert main(["integrate", write("o.json", ODE), "--x0", "1,0", "--t1", "3", "--project", c, "--out", str(out)]) == 0
    tr = files.read_trajectory_csv(out)
    assert np.max(tr.segments[0].constraint_norm) < 1e-10


def test_integrate_no_solution(sphere_model):
    assert main(["integrate", sphere_model, "--x0", "0.6,0,0.8,0,1,0,0.3"]) == 3


def test_integrate_input_errors(write):
    m = write("u.json", UNIT)
    assert main(["integrate", m, "--x0", "0,1"]) == 2
    assert main(["integrate", m, "--x0", "0", "--step", "-1"]) == 2
    assert main(["integrate", m, "--x0", "0", "--t1", "0"]) == 2
    assert main(["integrate", m]) == 2


def test_lift(write, tmp_path):
    out = tmp_path / "l.json"
    mp = write("map.json", {"domain_variables": ["y"], "components": ["0", "y"]})
    assert main(["lift", write("dae.json", DAE), "--map", mp, "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["f"] == ["y", "0"] and d["a"] == [["0"], ["0"]]
    assert d["lineage"]["parent_name"] == "dae" and d["lineage"]["map_file"] == mp
    ident = write("id.json", {"domain_variables": ["x1", "x2"], "components": ["x1", "x2"]})
    assert main(["lift", write("dae.json", DAE), "--map", ident, "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["a"] == DAE["a"] and d["f"] == DAE["f"]
    assert main(["lift", write("u.json", UNIT), "--map", mp]) == 2


def test_lift_sphere_with_constraints(sphere_model, write, tmp_path):
    out = tmp_path / "l.json"
    v = ["z1", "z2", "z3", "u1", "u2", "u3", "v0"]
    ident = write("id.json", {"domain_variables": v, "components": v})
    cons = write("c.json", {"constraints": ["u3 - v0*z3", "u1^2+u2^2+u3^2 + 3/2*v0^2 - 1", "z1^2+z2^2+z3^2-1", "z1*u1+z2*u2+z3*u3"]})
    assert main(["lift", sphere_model, "--map", ident, "--constraints", cons, "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert len(d["f"]) == 12 and d["lineage"]["level"] == 1


def test_sphere_modes(tmp_path):
    out = tmp_path / "a.json"
    assert main(["sphere", "--mode", "verify-a", "--samples", "1000", "--seed", "7", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["failures"] == []
    assert main(["sphere", "--mode", "verify-b", "--samples", "200", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["failures"] == []
    assert main(["sphere", "--mode", "extended", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["f"]) == 11
    assert main(["sphere", "--mode", "bogus"]) == 2
    assert main(["sphere", "--mode", "planar"]) == 2
    assert main(["sphere", "--mode", "full", "--alpha", "-1"]) == 2


def test_sphere_planar_first_integral(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["sphere", "--mode", "planar", "--x0", "1.0,0.5", "--t1", "5", "--step", "1e-3", "--out", str(out)]) == 0
    rows = [r for r in csv.reader(io.StringIO(out.read_text())) if r and not r[0].startswith("#")]
    head, body = rows[0], rows[1:]
    c = np.array([float(r[head.index("first_integral")]) for r in body])
    assert np.max(np.abs(c - c[0])) < 1e-9


def test_sphere_reduced_vs_lifted(tmp_path):
    red, lif = tmp_path / "r.csv", tmp_path / "l.csv"
    common = ["--x0", "1.0,0.5,0.0", "--t1", "0.5", "--step", "1e-3"]
    assert main(["sphere", "--mode", "reduced", *common, "--out", str(red)]) == 0
    assert main(["sphere", "--mode", "lifted", *common, "--out", str(lif)]) == 0
    r, l = files.read_trajectory_csv(red), files.read_trajectory_csv(lif)
    assert np.max(np.abs(chart_embed_many(r.states) - l.states)) < 1e-6


def test_sphere_pole_start_is_an_error():
    assert main(["sphere", "--mode", "reduced", "--x0", "0,0,0"]) == 3


def test_help_lists_every_flag(capsys):
    assert main(["integrate", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--x0", "--t0", "--t1", "--step", "--homogeneous", "--arc", "--project", "--tol", "--out"):
        assert flag in text
