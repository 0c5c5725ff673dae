from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from idesing.parsing import parse_polynomial as P
from idesing.solver import project_onto_constraints
from idesing.sphere import (
    VARIABLES,
    SinThetaZero,
    SphereParams,
    annotate_reduced,
    constraint_jacobian_m1b,
    build_branch_system,
    build_extended_lifted_system,
    build_lifted_system,
    chart_embed,
    chart_embed_many,
    chart_pushforward,
    first_integral,
    integrate_lifted,
    integrate_planar,
    integrate_reduced,
    m1b_constraints,
    planar_rhs,
    pole_vectors_closed_form,
    reconstruct_kinematics,
    reduced_rhs,
    sample_m1b,
    special_solutions,
    verify_appendix_a,
    verify_appendix_b,
)

V = VARIABLES


def test_params(params):
    assert (params.mu, params.lam, params.b) == (1, Fraction(3, 2), 1.0)
    with pytest.raises(ValueError):
        SphereParams(0, 1, 1)
    q = SphereParams.from_physical(I1=2, I3=4, mass=1, radius=1, epsilon=1)
    assert (q.alpha, q.beta) == (2, Fraction(1, 2))


def test_full_system_rows(sphere):
    assert (sphere.m, sphere.n) == (8, 7)
    assert sphere.a.row(3) == [P(e, V) for e in ("0", "0", "0", "-2*z2*z3", "2*z1*z3", "0", "0")]
    assert sphere.f[4].evaluate([0, 0, 1, 1, 0, 0, 0]) == 0


def test_lifted_fourth_row(params):
    s = build_lifted_system(params).system
    assert (s.m, s.n) == (8, 7)
    assert s.a.row(3) == [P(e, V) for e in ("0", "0", "0", "z2", "-z1", "0", "0")]
    assert s.f[3] == P("3/2*v0*u3", V)


def test_extended_system_shape_and_u3_row(params):
    s = build_extended_lifted_system(params)
    assert (s.m, s.n) == (11, 7)
    target = [P(e, V) for e in ("0", "0", "0", "0", "0", "1", "-z3")]
    rows = [i for i in range(s.m) if s.a.row(i) == target]
    assert rows and s.f[rows[0]] == P("v0*z1*u2 - v0*z2*u1", V)


def test_chart_embed_examples(params):
    st = chart_embed((math.pi / 2, 0, 0), params)
    np.testing.assert_allclose(st.z, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(st.u, [0, 0, 0], atol=1e-15)
    assert abs(st.v0 - math.sqrt(2 / 3)) < 1e-15
    assert abs(2 * np.dot(st.u, st.u) + 3 * st.v0**2 - 2) < 1e-15
    for phi in (0.0, 1.0, 4.0):
        pole = chart_embed((0.0, phi, 0.7), params)
        np.testing.assert_allclose(pole.vector, [0, 0, 1, -math.cos(0.7), -math.sin(0.7), 0, 0], atol=1e-15)


def test_samples_lie_on_m1b(params):
    c = m1b_constraints(params)
    X = np.array([s.vector for s in sample_m1b(params, 1000, seed=2)])
    assert np.max(np.abs(c.evaluate(X))) < 1e-12
    assert np.max(np.abs(2 * (X[:, 3:6] ** 2).sum(1) + 3 * X[:, 6] ** 2 - 2)) < 1e-10
    a, b = sample_m1b(params, 1, seed=9)[0], sample_m1b(params, 1, seed=9)[0]
    np.testing.assert_array_equal(a.vector, b.vector)


def test_reduced_and_planar_rhs(params):
    np.testing.assert_allclose(reduced_rhs((math.pi / 2, 0, 0), params), [0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(reduced_rhs((math.pi / 2, math.pi / 2, 0), params), [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(planar_rhs(math.pi / 2, 0, params), [0, 0], atol=1e-15)
    np.testing.assert_allclose(planar_rhs(math.pi / 2, math.pi / 2, params), [-1, 0], atol=1e-15)
    rng = np.random.default_rng(1)
    for _ in range(100):
        c = (rng.uniform(0.1, 3.0), rng.uniform(0, 6.28), rng.uniform(0, 6.28))
        r = reduced_rhs(c, params)
        pl = planar_rhs(c[0], c[1] - c[2], params)
        assert abs(pl[0] - r[0]) < 1e-12 and abs(pl[1] - (r[1] - r[2])) < 1e-12
    with pytest.raises(SinThetaZero):
        reduced_rhs((0.0, 0.0, 0.0), params)
    with pytest.raises(SinThetaZero):
        planar_rhs(math.pi, 0.3, params)


def test_pushforward_solves_lifted_systems(params):
    lifted = build_lifted_system(params).system
    ext = build_extended_lifted_system(params)
    rng = np.random.default_rng(4)
    for _ in range(100):
        c = (rng.uniform(0.1, 3.0), rng.uniform(0, 6.28), rng.uniform(0, 6.28))
        x, v = chart_embed(c, params).vector, chart_pushforward(c, params)
        assert np.max(np.abs(lifted.residual(x, v))) < 1e-10
        assert np.max(np.abs(ext.residual(x, v))) < 1e-10
        A = lifted.eval_a(x)
        af = np.column_stack([A, lifted.eval_f(x)])
        assert np.linalg.matrix_rank(A, 1e-8 * np.linalg.norm(af, 2)) == 4
        assert np.linalg.matrix_rank(af, 1e-8 * np.linalg.norm(af, 2)) == 4


def test_first_integral(params):
    assert abs(first_integral(math.pi / 2, math.pi / 2)) < 1e-16
    assert first_integral(math.pi / 2, 0.0) == 1.0
    tr = integrate_planar((1.0, 0.5), (0, 5), 1e-3, params)
    C = first_integral(tr.states[:, 0], tr.states[:, 1])
    assert np.max(np.abs(C - C[0])) < 1e-9


def test_planar_closed_form_hits_guard(params):
    tr = integrate_planar((math.pi / 2, math.pi / 2), (0, 2), 1e-3, params)
    seg = tr.segments[-1]
    assert seg.termination == "rank_event" and seg.event["method"] == "sin_theta_guard"
    assert seg.times[-1] < math.pi / 2
    np.testing.assert_allclose(seg.states[:, 0], math.pi / 2 - seg.times, atol=1e-8)
    np.testing.assert_allclose(seg.states[:, 1], math.pi / 2, atol=1e-8)


def test_reduced_annotation(params):
    tr = annotate_reduced(integrate_reduced((1.0, 0.5, 0.0), (0, 0.5), 1e-3, params), params)
    seg = tr.segments[0]
    assert np.max(seg.residual) < 1e-10 and np.all(seg.rank_a == 7)


def test_special_solutions(params):
    v0 = math.sqrt(2 / 3)
    tr = special_solutions("z3_zero_rolling", params, [0.6, 0.8, 0, 0, 0, 0, v0], (0, 3), 1e-2)
    assert np.max(tr.segments[0].residual) < 1e-10
    np.testing.assert_array_equal(tr.states[0], tr.states[-1])
    k = reconstruct_kinematics(tr, params)
    assert k.max_abs_omega3 == 0.0
    np.testing.assert_allclose(k.contact_velocity, k.contact_velocity[0:1].repeat(len(tr.times), 0))
    tr = special_solutions("sin_theta_zero_circle", params, [0, 0, 1, 0.6, 0.8, 0, 0], (0, 6), 1e-2)
    X = tr.states
    assert np.max(tr.segments[0].residual) < 1e-10
    np.testing.assert_allclose(np.linalg.norm(X[:, :3], axis=1), 1, atol=1e-14)
    # great circle through the pole in the plane orthogonal to u
    assert np.max(np.abs(X[:, :3] @ np.array([0.6, 0.8, 0]))) < 1e-14
    zdot = np.gradient(X[:, :3], tr.times, axis=0)[1:-1]
    np.testing.assert_allclose(np.linalg.norm(zdot, axis=1), 1, atol=1e-3)
    assert reconstruct_kinematics(tr, params).max_abs_omega3 < 1e-14
    with pytest.raises(ValueError):
        special_solutions("z3_zero_rolling", params, [0, 0, 1, 0, 0, 0, 0])


def test_branch_without_motion(params):
    from idesing.solver import NoSolutionAtPoint, solve_las

    s = build_branch_system(params, "z12_zero")
    with pytest.raises(NoSolutionAtPoint):
        solve_las(s, [0, 0, 1, 1, 0, 0, 0])


def test_m1b_constraint_jacobian_rank(params):
    z1, v0 = 0.6, 0.5
    u2 = math.sqrt(1 - 1.5 * v0**2)
    x = np.array([z1, 0.8, 0, -0.8 * u2 / 1.0, 0.6 * u2, 0, v0])
    A = constraint_jacobian_m1b(x, params)
    assert A.shape == (4, 7) and np.linalg.matrix_rank(A) == 4
    pole = np.array([0, 0, 1, 0.6, 0.8, 0, 0])
    assert np.linalg.matrix_rank(constraint_jacobian_m1b(pole, params)) == 4
    rep = verify_appendix_a(params, 1000, seed=0)
    assert rep["failures"] == [] and rep["min_ratio"] > 1e-8


def test_chart_immersion(params):
    rep = verify_appendix_b(params, 1000, seed=0)
    assert rep["failures"] == []
    assert min(p["gram_det"] for p in rep["poles"]) > 1e-8
    assert rep["closed_form_gap"] < 1e-10
    V3 = pole_vectors_closed_form(0.3, params)
    b = params.b
    np.testing.assert_allclose(V3[2], [0, 0, 0, b * math.sin(0.3), -b * math.cos(0.3), 0, 0], atol=1e-15)


def test_chart_injectivity_and_pole_independence(params):
    g = np.linspace(0, 2 * math.pi, 20, endpoint=False)
    th = np.linspace(0, math.pi, 22)[1:-1]
    grid = np.array([(a, b, c) for a in th[::1][:20] for b in g for c in g])
    X = chart_embed_many(grid, params)
    assert len(np.unique(np.round(X, 9), axis=0)) == len(grid)
    for theta in (0.0, math.pi):
        outs = [chart_embed((theta, phi, 1.1), params).vector for phi in g]
        assert np.max(np.ptp(np.array(outs), axis=0)) < 1e-15


def test_projection_onto_m1b(params):
    c = m1b_constraints(params)
    rng = np.random.default_rng(3)
    for st in sample_m1b(params, 20, seed=5):
        pr = project_onto_constraints(st.vector + 1e-4 * rng.normal(size=7), c, tol=1e-12, max_iter=5)
        assert pr.iterations <= 5 and np.max(np.abs(c.evaluate(pr.point))) < 1e-10


def test_lifted_forms_agree(params):
    a = integrate_lifted((1.0, 0.5, 0.0), (0, 0.5), 1e-3, params, form="lifted")
    b = integrate_lifted((1.0, 0.5, 0.0), (0, 0.5), 1e-3, params, form="extended")
    assert a.termination == b.termination == "completed"
    assert np.max(np.abs(a.states - b.states)) < 1e-8
    k = reconstruct_kinematics(b, params)
    assert k.max_abs_omega3 < 1e-8
