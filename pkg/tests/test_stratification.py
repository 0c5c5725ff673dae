from __future__ import annotations

import random

import numpy as np
import pytest

from idesing.ide import ConstraintSet, make_system
from idesing.parsing import parse_polynomial as P
from idesing.polynomial import compile_polynomials, minors_of_order
from idesing.stratification import (
    classify_point,
    decompose_domain,
    locus_mismatches,
    minor_ideal_generators,
    point_ranks,
    rank_profile,
    reduce_iteratively,
    same_zero_locus,
)

SV = ("z1", "z2", "z3", "u1", "u2", "u3", "v0")


def _normalized(gens):
    return {g.primitive().sign_normalized() for g in gens if not g.is_zero()}


def test_diagonal_minor_generators():
    X = ("x1", "x2")
    s = make_system(X, [["x1", 0], [0, "x2"]], [0, 0])
    s1, _ = minor_ideal_generators(s, 1)
    s0, _ = minor_ideal_generators(s, 0)
    assert _normalized(s1) == {P("x1*x2", X)}
    assert _normalized(s0) == {P("x1", X), P("x2", X)}
    with pytest.raises(ValueError):
        minor_ideal_generators(s, 3)


def test_sphere_s3_generators(sphere):
    s3, _ = minor_ideal_generators(sphere, 3)
    assert _normalized(s3) == {P("z2*z3", SV), P("z1*z3", SV)}
    s4, l4 = minor_ideal_generators(sphere, 4)
    assert all(g.is_zero() for g in s4)
    assert any(not g.is_zero() for g in l4)


def test_sphere_rank_profile(sphere):
    prof = rank_profile(sphere)
    assert prof.distinct_ranks == [3, 4]
    assert (prof.generic_rank_a, prof.generic_rank_af) == (4, 5)


def test_small_rank_profiles(linear_dae):
    prof = rank_profile(linear_dae)
    assert prof.distinct_ranks == [1] and prof.generic_rank_af == 2
    ode = make_system(["x", "y"], [[1, 0], [0, 1]], ["y", "-x"])
    prof = rank_profile(ode)
    assert prof.distinct_ranks == [2] and prof.generic_rank_af == 2


def test_sphere_decomposition_matches_m0a_union_m0b(sphere):
    r = decompose_domain(sphere)
    assert r.case == "b"
    (family,) = r.m0_generator_families
    assert any(not g.is_zero() for g in family)
    comps = [[P("z3", SV)], [P("z1", SV), P("z2", SV)], list(sphere.f[4:])]
    out = locus_mismatches(family, comps, SV, n_points=2000, seed=1)
    assert out["mismatches"] == 0


def test_ode_and_impasse_cases(impasse):
    ode = make_system(["x", "y"], [[1, 0], [0, 1]], ["y", "-x"])
    r = decompose_domain(ode)
    assert r.case == "c" and r.m0_empty
    r = decompose_domain(impasse)
    assert r.case == "c"
    assert [_normalized(f) for f in r.m0_generator_families] == [{P("x", ("x",))}]


def test_case_a():
    # [a, f] = [[1, 0], [0, x^2 + 1]] has full rank everywhere: no solutions anywhere
    s = make_system(["x"], [[1], [0]], ["0", "x^2 + 1"])
    r = decompose_domain(s)
    assert r.case == "a" and r.m0_empty


def test_classify_examples(sphere, impasse):
    lab = classify_point(sphere, [0, 0, 1, 1, 0, 0, 0], top_rank=4)
    assert lab.label == "M0" and lab.rank_a == 3
    rng = np.random.default_rng(5)
    x = rng.normal(size=7)
    lab = classify_point(sphere, x, top_rank=4, case="b")
    assert (lab.label, lab.rank_a, lab.rank_af) == ("M1", 4, 5)
    lab = classify_point(impasse, [1.0])
    assert (lab.label, lab.rank_a, lab.rank_af) == ("M2", 1, 1)
    assert classify_point(impasse, [0.0]).label == "M0"
    with pytest.raises(ValueError):
        classify_point(impasse, [1.0, 2.0])
    with pytest.raises(ValueError):
        classify_point(impasse, [1.0], tol=2.0)


def _minor_rank(s, x, scale):
    best = 0
    for k in range(1, min(s.m, s.n) + 1):
        gens = [g for g in minors_of_order(s.a, k) if not g.is_zero()]
        if gens and np.max(np.abs(compile_polynomials(gens)(x))) > 1e-9 * scale**k:
            best = k
    return best


def _random_system(rng: random.Random):
    n = rng.randint(1, 4)
    m = rng.randint(1, 4)
    X = [f"x{i}" for i in range(n)]
    atoms = ["0", "0", "1", "-2"] + X + [f"{a}*{b}" for a in X for b in X]
    a = [[rng.choice(atoms) for _ in X] for _ in range(m)]
    f = [rng.choice(atoms) for _ in range(m)]
    return make_system(X, a, f)


def test_rank_consistency_and_partition(sphere):
    rng = random.Random(11)
    npr = np.random.default_rng(11)
    systems = [sphere] + [_random_system(rng) for _ in range(20)]
    for s in systems:
        top = decompose_domain(s, budget=300).profile.generic_rank_a
        for _ in range(200 if s is sphere else 10):
            x = npr.normal(size=s.n)
            ra, raf = point_ranks(s, x)
            sv = np.linalg.svd(s.eval_a(x), compute_uv=False)
            ref = np.linalg.norm(np.column_stack([s.eval_a(x), s.eval_f(x)]), 2)
            assert ra == int(np.sum(sv > 1e-8 * ref))
            assert ra == _minor_rank(s, x, max(1.0, np.abs(s.eval_a(x)).max()))
            assert raf >= ra
            lab = classify_point(s, x, top_rank=top)
            assert lab.label in {"M0", "M1", "M2"}
            if lab.label == "M2":
                assert lab.rank_a == lab.rank_af == top
            elif lab.label == "M1":
                assert lab.rank_af > lab.rank_a


def test_linear_dae_reduction(linear_dae):
    res = reduce_iteratively(linear_dae)
    assert res.converged and res.steps == 2
    X = linear_dae.variables
    assert same_zero_locus(res.fixed_locus, [P("x1", X), P("x2", X)], X)


def test_ode_reduction_is_trivial():
    ode = make_system(["x", "y"], [[1, 0], [0, 1]], ["y", "-x"])
    res = reduce_iteratively(ode)
    assert res.steps == 0 and res.converged and res.fixed_locus == []
