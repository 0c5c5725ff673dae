"""Rank stratification of an IDE domain by minor ideals.

``S_i`` is the locus where ``rank a <= i`` and ``L_i`` the part of it where
``rank [a, f] <= i``; both are cut out by ``(i+1)``-minors. From the generic
ranks and these loci the domain splits into ``M0`` (singular, to be
desingularized), ``M1`` (no solution) and ``M2`` (constant rank).

Emptiness of a real algebraic set is decided by a seeded Gauss-Newton search
from the best of a batch of random samples. Results carry the evidence level:
``"proven"`` when a generator is a nonzero constant or every generator is the
zero polynomial, ``"sampled"`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ide import ConstraintSet, IdeSystem, restrict_by_constraints
from .polynomial import Polynomial, compile_matrix, compile_polynomials, generic_rank, minors_of_order

DEFAULT_TOL = 1e-8
DEFAULT_BUDGET = 10_000
DEFAULT_BOX = 2.0
ZERO_TOL = 1e-9


# ---------------------------------------------------------------------------
# common-zero search


class _Generators:
    """Coefficient-normalized generators with compiled values and Jacobian."""

    def __init__(self, gens: Sequence[Polynomial], variables: Sequence[str]):
        self.variables = tuple(variables)
        self.polys = [g * (1 / max(abs(c) for c in g.terms.values())) for g in gens if g]
        self.n = len(self.variables)
        if self.polys:
            self._val = compile_polynomials(self.polys)
            jac = [d for g in self.polys for d in g.gradient()]
            self._jac = compile_polynomials(jac)

    def values(self, x: np.ndarray) -> np.ndarray:
        return self._val(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self._jac(x).reshape(len(self.polys), self.n)

    def vanish(self, x: np.ndarray, tol: float = ZERO_TOL) -> np.ndarray:
        """Boolean mask (batch) or bool (single point): every generator below ``tol``."""
        if not self.polys:
            x = np.asarray(x)
            return np.ones(x.shape[0], bool) if x.ndim == 2 else True
        vals = np.abs(self.values(x))
        scale = 1.0 + np.abs(np.asarray(x, dtype=float)).max(axis=-1) ** self.max_degree
        return vals.max(axis=-1) <= tol * scale

    @property
    def max_degree(self) -> int:
        return max((g.total_degree() for g in self.polys), default=0)

    def newton(self, x0: np.ndarray, iters: int = 60, tol: float = 1e-13) -> tuple[np.ndarray, bool]:
        x = np.array(x0, dtype=float)
        for _ in range(iters):
            g = self.values(x)
            if np.max(np.abs(g)) < tol:
                return x, True
            step = np.linalg.lstsq(self.jacobian(x), g, rcond=None)[0]
            x = x - step
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e8:
                return x, False
        return x, bool(np.max(np.abs(self.values(x))) < 1e-10)

    def newton_batch(self, x0: np.ndarray, iters: int = 60, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`newton` over the rows of ``x0``."""
        x = np.array(x0, dtype=float)
        active = np.ones(len(x), bool)
        for _ in range(iters):
            idx = np.flatnonzero(active)
            if not idx.size:
                break
            g = self.values(x[idx])
            done = np.max(np.abs(g), axis=1) < tol
            active[idx[done]] = False
            idx, g = idx[~done], g[~done]
            if not idx.size:
                break
            J = self._jac(x[idx]).reshape(len(idx), len(self.polys), self.n)
            step = np.einsum("bij,bj->bi", np.linalg.pinv(J), g)
            x[idx] -= step
            bad = ~np.all(np.isfinite(x[idx]), axis=1) | (np.max(np.abs(x[idx]), axis=1) > 1e8)
            active[idx[bad]] = False
            x[idx[bad]] = np.nan
        ok = np.all(np.isfinite(x), axis=1)
        ok[ok] = np.max(np.abs(self.values(x[ok])), axis=1) < 1e-10
        return x, ok


@dataclass
class ZeroSearch:
    """Outcome of a common-zero search."""

    points: np.ndarray
    evidence: dict

    @property
    def found(self) -> bool:
        return len(self.points) > 0


def find_common_zeros(
    gens: Sequence[Polynomial],
    variables: Sequence[str],
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    box: float = DEFAULT_BOX,
    starts: int = 48,
) -> ZeroSearch:
    """Search for real points where every generator vanishes.

    ``budget`` uniform samples in ``[-box, box]^n`` are ranked by the sum of
    squared (coefficient-normalized) generator values; Gauss-Newton is run
    from the ``starts`` best of them.
    """
    n = len(variables)
    gens = list(gens)
    evidence = {"seed": seed, "budget": budget, "box": box, "starts": 0, "hits": 0}
    nonzero = [g for g in gens if g]
    if not nonzero:
        evidence["level"] = "proven"
        evidence["reason"] = "all generators identically zero"
        return ZeroSearch(np.zeros((1, n)), evidence)
    if any(g.is_constant() for g in nonzero):
        evidence["level"] = "proven"
        evidence["reason"] = "nonzero constant generator"
        return ZeroSearch(np.zeros((0, n)), evidence)
    G = _Generators(nonzero, variables)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-box, box, size=(budget, n))
    score = np.sum(G.values(samples) ** 2, axis=1)
    order = np.argsort(score, kind="stable")[: min(starts, budget)]
    found = []
    for k in order:
        x, ok = G.newton(samples[k])
        if ok and G.vanish(x):
            found.append(x)
    evidence.update(level="sampled", starts=int(len(order)), hits=len(found))
    return ZeroSearch(np.array(found).reshape(len(found), n), evidence)


def sample_zero_locus(
    gens: Sequence[Polynomial],
    variables: Sequence[str],
    n_points: int = 64,
    seed: int = 0,
    box: float = DEFAULT_BOX,
) -> np.ndarray:
    """Points on the common zero set, by Gauss-Newton from random starts."""
    n = len(variables)
    nonzero = [g for g in gens if g]
    rng = np.random.default_rng(seed)
    if not nonzero:
        return rng.uniform(-box, box, size=(n_points, n))
    if any(g.is_constant() for g in nonzero):
        return np.zeros((0, n))
    G = _Generators(nonzero, variables)
    x, ok = G.newton_batch(rng.uniform(-box, box, size=(n_points, n)))
    x = x[ok]
    return x[G.vanish(x)] if len(x) else x


def same_zero_locus(
    first: Sequence[Polynomial],
    second: Sequence[Polynomial],
    variables: Sequence[str],
    n_points: int = 64,
    seed: int = 0,
    tol: float = 1e-8,
) -> bool:
    """Sampled comparison of two zero loci.

    Points are sampled on each locus and the other locus' generators are
    required to vanish there (relative to ``tol``).
    """
    pa = sample_zero_locus(first, variables, n_points, seed)
    pb = sample_zero_locus(second, variables, n_points, seed + 1)
    if len(pa) == 0 or len(pb) == 0:
        return len(pa) == len(pb)
    ga = _Generators(first, variables)
    gb = _Generators(second, variables)
    return bool(np.all(gb.vanish(pa, tol)) and np.all(ga.vanish(pb, tol)))


def locus_mismatches(
    first: Sequence[Polynomial],
    components: Sequence[Sequence[Polynomial]],
    variables: Sequence[str],
    n_points: int = 10_000,
    seed: int = 0,
    tol: float = 1e-8,
) -> dict:
    """Compare ``V(first)`` with the union of ``V(component)`` by sampling.

    Half of the budget samples ``V(first)``, the rest is split over the
    components; every sample must lie on the other side. Returns the counts.
    """
    per = max(1, n_points // (2 * max(1, len(components))))
    pa = sample_zero_locus(first, variables, n_points - per * len(components), seed)
    ga = _Generators([g for g in first if g], variables)
    gcs = [_Generators([g for g in c if g], variables) for c in components]
    miss = 0
    sampled = len(pa)
    if len(pa):
        on_union = np.zeros(len(pa), bool)
        for gc in gcs:
            on_union |= gc.vanish(pa, tol)
        miss += int(np.sum(~on_union))
    for k, comp in enumerate(components):
        pb = sample_zero_locus(comp, variables, per, seed + 1 + k)
        sampled += len(pb)
        if len(pb):
            miss += int(np.sum(~ga.vanish(pb, tol)))
    return {"sampled": sampled, "mismatches": miss, "seed": seed}


# ---------------------------------------------------------------------------
# ranks


def numerical_rank(values: np.ndarray, tol: float, reference: float | None = None) -> int:
    """Number of singular values above ``tol * reference`` (default: the largest)."""
    if values.size == 0:
        return 0
    sv = np.linalg.svd(values, compute_uv=False)
    ref = sv[0] if reference is None else reference
    if ref == 0:
        return 0
    return int(np.sum(sv > tol * ref))


def minor_ideal_generators(s: IdeSystem, i: int) -> tuple[list[Polynomial], list[Polynomial]]:
    """Generators of ``S_i`` ((i+1)-minors of a) and ``L_i`` (those plus the (i+1)-minors of [a, f])."""
    if not 0 <= i <= min(s.m, s.n):
        raise ValueError(f"rank bound {i} out of range for a {s.m}x{s.n} system")
    k = i + 1
    s_gens = minors_of_order(s.a, k) if k <= min(s.m, s.n) else []
    af_gens = minors_of_order(s.augmented, k) if k <= min(s.m, s.n + 1) else []
    seen = dict.fromkeys(s_gens)
    for g in af_gens:
        seen.setdefault(g, None)
    return s_gens, list(seen)


@dataclass
class RankProfile:
    distinct_ranks: list[int]
    generic_rank_a: int
    generic_rank_af: int
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "distinct_ranks": self.distinct_ranks,
            "generic_rank_a": self.generic_rank_a,
            "generic_rank_af": self.generic_rank_af,
            "evidence": self.evidence,
        }


def rank_profile(
    s: IdeSystem,
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    box: float = DEFAULT_BOX,
) -> RankProfile:
    """Generic ranks of ``a`` and ``[a, f]`` and the ranks of ``a`` attained on the domain."""
    kr = generic_rank(s.a, seed=seed)
    kaf = generic_rank(s.augmented, seed=seed)
    ranks = {kr}
    evidence = {}
    for i in range(kr - 1, -1, -1):
        gens = minors_of_order(s.a, i + 1)
        search = find_common_zeros(gens, s.variables, budget=budget, seed=seed + i + 1, box=box)
        evidence[f"S_{i}"] = search.evidence
        if not search.found:
            break
        a_eval = compile_matrix(s.a)
        af_eval = compile_matrix(s.augmented)
        for x in search.points:
            ref = np.linalg.norm(af_eval(x), 2)
            ranks.add(numerical_rank(a_eval(x), tol, ref))
    return RankProfile(sorted(r for r in ranks if r <= kr), kr, kaf, evidence)


@dataclass(frozen=True)
class StratumLabel:
    label: str
    rank_a: int
    rank_af: int

    def __str__(self) -> str:
        return f"{self.label} rank_a={self.rank_a} rank_af={self.rank_af}"


def point_ranks(s: IdeSystem, x, tol: float = DEFAULT_TOL) -> tuple[int, int]:
    """Numerical ranks of ``a(x)`` and ``[a(x), f(x)]``, thresholded against the norm of the latter."""
    a = s.eval_a(x)
    af = np.column_stack([a, s.eval_f(x)]) if s.m else np.zeros((0, s.n + 1))
    ref = np.linalg.norm(af, 2) if af.size else 0.0
    return numerical_rank(a, tol, ref), numerical_rank(af, tol, ref)


def classify_point(
    s: IdeSystem,
    x,
    tol: float = DEFAULT_TOL,
    top_rank: int | None = None,
    case: str | None = None,
) -> StratumLabel:
    """Label a point M0, M1 or M2.

    Without ``case`` the label is pointwise: ``rank a < k_r`` gives M0,
    ``rank [a, f] > rank a`` gives M1, equal ranks give M2. With
    ``case="b"`` a point of full rank where both ranks agree lies in
    ``L_{k_r}`` and is labelled M0.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (s.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({s.n},)")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    kr = generic_rank(s.a) if top_rank is None else top_rank
    ra, raf = point_ranks(s, x, tol)
    if ra < kr:
        label = "M0"
    elif raf > ra:
        label = "M1"
    elif case == "b":
        label = "M0"
    else:
        label = "M2"
    return StratumLabel(label, ra, raf)


@dataclass
class StratificationReport:
    profile: RankProfile
    s_generators: dict[int, list[Polynomial]]
    l_generators: dict[int, list[Polynomial]]
    case: str
    m0_generator_families: list[list[Polynomial]]
    evidence: dict
    variables: tuple[str, ...] = ()

    @property
    def m0_empty(self) -> bool:
        return not self.m0_generator_families

    def m0_constraints(self) -> list[ConstraintSet]:
        return [ConstraintSet(tuple(f), self.variables) for f in self.m0_generator_families]

    def to_dict(self) -> dict:
        fmt = lambda gens: [str(g) for g in gens]  # noqa: E731
        return {
            "variables": list(self.variables),
            "ranks": self.profile.distinct_ranks,
            "generic_rank_a": self.profile.generic_rank_a,
            "generic_rank_af": self.profile.generic_rank_af,
            "case": self.case,
            "s_generators": {str(k): fmt(v) for k, v in self.s_generators.items()},
            "l_generators": {str(k): fmt(v) for k, v in self.l_generators.items()},
            "m0_generator_families": [fmt(f) for f in self.m0_generator_families],
            "evidence": {"profile": self.profile.evidence, **self.evidence},
        }


def decompose_domain(
    s: IdeSystem,
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    box: float = DEFAULT_BOX,
) -> StratificationReport:
    """Split the domain into M0, M1, M2 and decide which of the cases (a), (b), (c) holds."""
    profile = rank_profile(s, tol, budget, seed, box)
    kr = profile.generic_rank_a
    s_gens: dict[int, list[Polynomial]] = {}
    l_gens: dict[int, list[Polynomial]] = {}
    for k in profile.distinct_ranks:
        s_gens[k], l_gens[k] = minor_ideal_generators(s, k)
    top = l_gens[kr]
    search = find_common_zeros(top, s.variables, budget=budget, seed=seed, box=box)
    if not any(g for g in top):
        case = "c"
    elif not search.found:
        case = "a"
    else:
        case = "b"
    families: list[list[Polynomial]] = []
    if case == "b":
        families.append(top)
    elif case == "c" and len(profile.distinct_ranks) > 1:
        families.append(s_gens[profile.distinct_ranks[-2]])
    evidence = {"L_top": search.evidence, "tol": tol}
    return StratificationReport(profile, s_gens, l_gens, case, families, evidence, s.variables)


# ---------------------------------------------------------------------------
# iterated reduction


def reduction_step(s: IdeSystem, c: ConstraintSet) -> tuple[IdeSystem, ConstraintSet]:
    """Restrict ``s`` to ``{c = 0}`` with tangency rows appended."""
    return restrict_by_constraints(s, c, "appended_with_derivative"), c


@dataclass
class ReductionResult:
    steps: int
    systems: list[IdeSystem]
    reports: list[StratificationReport]
    constraints: ConstraintSet
    converged: bool

    @property
    def final(self) -> IdeSystem:
        return self.systems[-1]

    @property
    def fixed_locus(self) -> list[Polynomial]:
        return list(self.constraints.generators)


def reduce_iteratively(
    s: IdeSystem,
    max_steps: int = 8,
    tol: float = DEFAULT_TOL,
    budget: int = 2000,
    seed: int = 0,
    locus_points: int = 48,
) -> ReductionResult:
    """Iterate restriction and re-stratification until M0 stops changing.

    Each step restricts the original system to the union of all M0 generator
    sets found so far. The iteration stops when M0 is empty or when its
    sampled zero locus equals the one from the previous step.
    """
    systems = [s]
    report = decompose_domain(s, tol, budget, seed)
    reports = [report]
    acc = ConstraintSet((), s.variables)
    previous: list[Polynomial] | None = None
    steps = 0
    for _ in range(max_steps):
        if report.m0_empty:
            return ReductionResult(steps, systems, reports, acc, True)
        gens = [g for fam in report.m0_generator_families for g in fam]
        if previous is not None and same_zero_locus(previous, gens, s.variables, locus_points, seed):
            return ReductionResult(steps, systems, reports, acc, True)
        acc = acc.union(ConstraintSet(tuple(gens), s.variables))
        current, _ = reduction_step(s, acc)
        steps += 1
        previous = gens
        report = decompose_domain(current, tol, budget, seed)
        systems.append(current)
        reports.append(report)
    return ReductionResult(steps, systems, reports, acc, False)
