from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idesing.ide import (
    ConstraintSet,
    IdeSystem,
    LinearRangeMap,
    ShapeError,
    constraint_only_system,
    direct_sum,
    homogenize,
    make_system,
    project_range,
    pullback,
    restrict_by_constraints,
)
from idesing.parsing import parse_polynomial as P
from idesing.polynomial import Polynomial, PolynomialMap, PolynomialMatrix

X = ("x1", "x2")


@pytest.fixture
def rotation():
    return make_system(X, [[1, 0], [0, 1]], ["-x2", "x1"], "rotation")


@pytest.fixture
def circle():
    return ConstraintSet((P("x1^2 + x2^2 - 1", X),), X)


def test_shape_errors():
    with pytest.raises(ShapeError):
        make_system(X, [[1]], ["x1"])
    with pytest.raises(ShapeError):
        make_system(X, [[1, 0]], ["x1", "x2"])
    with pytest.raises(ValueError):
        make_system(["x", "x"], [[1, 0]], ["1"])


def test_impasse_construction(impasse):
    assert (impasse.m, impasse.n) == (1, 1)
    assert impasse.residual([2.0], [0.5]).tolist() == [0.0]


def test_restriction_appended(rotation, circle):
    r = restrict_by_constraints(rotation, circle, "appended")
    assert (r.m, r.n) == (3, 2)
    assert all(e.is_zero() for e in r.a.row(2))
    assert r.f[2] == P("x1^2 + x2^2 - 1", X)
    assert r == direct_sum(rotation, constraint_only_system(circle), name=rotation.name)


def test_restriction_with_derivative(rotation, circle):
    r = restrict_by_constraints(rotation, circle, "appended_with_derivative")
    assert r.m == 4
    assert r.a.row(2) == [P("2*x1", X), P("2*x2", X)] and r.f[2].is_zero()
    assert all(e.is_zero() for e in r.a.row(3)) and r.f[3] == circle.generators[0]


def test_restriction_variable_mismatch(rotation):
    with pytest.raises(ValueError):
        restrict_by_constraints(rotation, ConstraintSet((P("y", ["y"]),), ("y",)))


def test_sphere_rebuilt_from_dynamic_core(sphere):
    core = sphere.rows([0, 1, 2, 3])
    nu = ConstraintSet(tuple(sphere.f[4:]), sphere.variables)
    assert restrict_by_constraints(core, nu) == sphere


def test_pullback_along_parabola(rotation):
    y = ("y",)
    s = pullback(rotation, PolynomialMap(y, [P("y", y), P("y^2", y)]))
    assert s.a.to_rows() == [[P("1", y)], [P("2*y", y)]]
    assert list(s.f) == [P("-y^2", y), P("y", y)]


def test_pullback_identity(rotation):
    assert pullback(rotation, PolynomialMap.identity(X)) == rotation
    with pytest.raises(ValueError):
        pullback(rotation, PolynomialMap(("y",), [P("y", ("y",))]))


def test_pullback_chain_rule_exact():
    rng = random.Random(3)
    s = make_system(X, [["x1*x2", "1"], ["x2^2", "x1 - 1"]], ["x1^2", "x2 - x1"], "s")
    Y = ("y1", "y2")
    g = PolynomialMap(Y, [P("y1 + y2^2", Y), P("y1*y2", Y)])
    Z = ("z1", "z2")
    h = PolynomialMap(Z, [P("z1 - z2", Z), P("z1^2", Z)])
    twice = pullback(pullback(s, g), h)
    once = pullback(s, g.after(h))
    for _ in range(100):
        z = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in Z]
        zd = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in Z]
        assert twice.residual_exact(z, zd) == once.residual_exact(z, zd)


def test_project_range(rotation, circle):
    assert project_range(rotation, LinearRangeMap.identity(2)) == rotation
    padded = direct_sum(rotation, make_system(X, [[0, 0]], [0]))
    dropped = project_range(padded, LinearRangeMap.select(3, [0, 1]))
    assert dropped.a == rotation.a and dropped.f == rotation.f
    with pytest.raises(ShapeError):
        project_range(rotation, LinearRangeMap.identity(3))


def test_direct_sum_with_empty_range(rotation):
    empty = IdeSystem("e", X, PolynomialMatrix(0, 2, [], X), [])
    assert direct_sum(rotation, empty) == rotation


def test_homogenize_impasse(impasse):
    h = homogenize(impasse)
    assert h.variables == ("x", "t_hom")
    assert h.a.to_rows() == [[P("x", h.variables), P("-1", h.variables)]]
    assert all(p.is_zero() for p in h.f)
    clash = make_system(["t_hom"], [["t_hom"]], ["1"])
    assert homogenize(clash).variables == ("t_hom", "t_hom1")


sys_entries = st.sampled_from(["0", "1", "x1", "x2", "x1*x2", "x1^2 - 2", "3*x2 - x1"])
systems = st.tuples(
    st.lists(st.lists(sys_entries, min_size=2, max_size=2), min_size=1, max_size=3),
    st.data(),
)
small = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@given(systems, st.lists(small, min_size=6, max_size=6))
@settings(max_examples=40)
def test_homogenized_residual_identity(data, vals):
    rows, draw = data
    f = draw.draw(st.lists(sys_entries, min_size=len(rows), max_size=len(rows)))
    s = make_system(X, rows, f)
    h = homogenize(s)
    x, v, t = vals[:2], vals[2:4], vals[4]
    assert h.residual_exact([*x, t], [*v, 1]) == s.residual_exact(x, v)


@given(systems, st.lists(small, min_size=4, max_size=4))
@settings(max_examples=40)
def test_direct_sum_residual_concatenates(data, vals):
    rows, draw = data
    f = draw.draw(st.lists(sys_entries, min_size=len(rows), max_size=len(rows)))
    s1 = make_system(X, rows, f)
    s2 = make_system(X, [["x2", "x1"]], ["x1*x2"])
    x, v = vals[:2], vals[2:]
    assert direct_sum(s1, s2).residual_exact(x, v) == s1.residual_exact(x, v) + s2.residual_exact(x, v)
    s3 = make_system(X, [["1", "0"]], ["x2"])
    a = direct_sum(direct_sum(s1, s2), s3)
    b = direct_sum(s1, direct_sum(s2, s3))
    assert a.a == b.a and a.f == b.f


def test_restricted_solution_stays_on_circle(rotation, circle):
    r = restrict_by_constraints(rotation, circle)
    for t in np.linspace(0, 2 * np.pi, 50):
        x = np.array([np.cos(t), np.sin(t)])
        v = np.array([-np.sin(t), np.cos(t)])
        assert np.max(np.abs(r.residual(x, v))) < 1e-8
        assert np.max(np.abs(rotation.residual(x, v))) < 1e-8
