"""Implicit differential equations ``a(x) xdot = f(x)`` in standard form.

An :class:`IdeSystem` holds an ``m x n`` polynomial matrix ``a`` and an
``m``-vector ``f`` over ``n`` named coordinates. The operations here act on
whole systems: restriction to a constraint set, pullback along a polynomial
map, projection of the range by a constant matrix, direct sums and
homogenization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .polynomial import (
    Polynomial,
    PolynomialMap,
    PolynomialMatrix,
    compile_matrix,
    compile_polynomials,
    compose,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IdeSystem:
    name: str
    variables: tuple[str, ...]
    a: PolynomialMatrix
    f: tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "f", tuple(self.f))
        if not _IDENT.match(self.name or ""):
            raise ValueError(f"system name {self.name!r} is not an identifier")
        if self.a.cols != len(self.variables):
            raise ShapeError(f"a has {self.a.cols} columns but there are {len(self.variables)} variables")
        if self.a.rows != len(self.f):
            raise ShapeError(f"a has {self.a.rows} rows but f has {len(self.f)} entries")
        if self.a.variables != self.variables:
            raise ShapeError("a is not over the system variables")
        for p in self.f:
            if p.variables != self.variables:
                raise ShapeError("f is not over the system variables")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.f)

    @cached_property
    def augmented(self) -> PolynomialMatrix:
        """``[a, f]`` as an ``m x (n+1)`` matrix."""
        fcol = PolynomialMatrix(self.m, 1, self.f, self.variables)
        return self.a.hstack(fcol)

    @cached_property
    def _eval_a(self) -> Callable[[np.ndarray], np.ndarray]:
        return compile_matrix(self.a)

    @cached_property
    def _eval_f(self) -> Callable[[np.ndarray], np.ndarray]:
        if not self.f:
            return lambda x: np.zeros((0,) if np.ndim(x) == 1 else (np.shape(x)[0], 0))
        return compile_polynomials(self.f)

    def eval_a(self, x) -> np.ndarray:
        x = self._check_point(x)
        return self._eval_a(x)

    def eval_f(self, x) -> np.ndarray:
        x = self._check_point(x)
        return self._eval_f(x)

    def residual(self, x, v) -> np.ndarray:
        """``a(x) v - f(x)`` in floating point."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n:
            raise ShapeError(f"velocity has {v.shape[-1]} components, expected {self.n}")
        return self.eval_a(x) @ v - self.eval_f(x)

    def residual_exact(self, x: Sequence, v: Sequence) -> list[Fraction]:
        if len(v) != self.n:
            raise ShapeError(f"velocity has {len(v)} components, expected {self.n}")
        out = []
        for i in range(self.m):
            total = -self.f[i].evaluate(x)
            for j in range(self.n):
                entry = self.a[i, j]
                if entry:
                    total += entry.evaluate(x) * v[j]
            out.append(total)
        return out

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ShapeError(f"point has {x.shape[-1]} coordinates, expected {self.n}")
        return x

    def rows(self, indices: Sequence[int], name: str | None = None) -> "IdeSystem":
        a = self.a.submatrix(list(indices), range(self.n))
        return IdeSystem(name or self.name, self.variables, a, [self.f[i] for i in indices])

    def renamed(self, name: str) -> "IdeSystem":
        return IdeSystem(name, self.variables, self.a, self.f)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IdeSystem)
            and self.variables == other.variables
            and self.a == other.a
            and self.f == other.f
        )

    def __hash__(self) -> int:
        return hash((self.variables, self.a, self.f))


@dataclass(frozen=True)
class ConstraintSet:
    """Generators ``phi_j`` whose common zero set is a submanifold of the domain."""

    generators: tuple[Polynomial, ...] = field(default_factory=tuple)
    variables: tuple[str, ...] | None = None

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        variables = self.variables
        if variables is None and gens:
            variables = gens[0].variables
        object.__setattr__(self, "variables", tuple(variables) if variables is not None else None)
        for g in gens:
            if g.variables != self.variables:
                raise ValueError("constraint generators must share one variable list")

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def union(self, other: "ConstraintSet") -> "ConstraintSet":
        seen = dict.fromkeys(self.generators)
        for g in other.generators:
            if g not in seen and -g not in seen:
                seen[g] = None
        return ConstraintSet(tuple(seen), self.variables or other.variables)

    @cached_property
    def jacobian(self) -> PolynomialMatrix:
        return PolynomialMatrix.from_rows([g.gradient() for g in self.generators], self.variables)

    @cached_property
    def _eval(self):
        return compile_polynomials(self.generators)

    @cached_property
    def _eval_jac(self):
        return compile_matrix(self.jacobian)

    def evaluate(self, x) -> np.ndarray:
        if not self.generators:
            return np.zeros(0)
        return self._eval(x)

    def evaluate_jacobian(self, x) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, np.shape(x)[-1]))
        return self._eval_jac(x)


@dataclass(frozen=True)
class LinearRangeMap:
    """A constant ``q x m`` matrix acting on the range of a system."""

    matrix: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in r) for r in self.matrix)
        if rows and len({len(r) for r in rows}) != 1:
            raise ShapeError("ragged range map")
        object.__setattr__(self, "matrix", rows)

    @classmethod
    def identity(cls, m: int) -> "LinearRangeMap":
        return cls(tuple(tuple(int(i == j) for j in range(m)) for i in range(m)))

    @classmethod
    def select(cls, m: int, keep: Sequence[int]) -> "LinearRangeMap":
        """Projection keeping the listed range coordinates in order."""
        return cls(tuple(tuple(int(j == k) for j in range(m)) for k in keep))

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.matrix), len(self.matrix[0]) if self.matrix else 0)


def make_system(variables: Sequence[str], a, f, name: str = "system") -> IdeSystem:
    """Build a validated system from polynomials or polynomial strings.

    ``a`` may be a :class:`PolynomialMatrix` or a nested list of entries;
    entries and ``f`` components may be :class:`Polynomial` objects, strings
    in the expression grammar, or numbers.
    """
    from .parsing import parse_polynomial

    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ValueError("duplicate variable names")

    def poly(entry) -> Polynomial:
        if isinstance(entry, Polynomial):
            if entry.variables != variables:
                raise ShapeError(f"entry {entry} is over {entry.variables}, not {variables}")
            return entry
        if isinstance(entry, str):
            return parse_polynomial(entry, variables)
        return Polynomial.constant(variables, entry)

    if isinstance(a, PolynomialMatrix):
        amat = a
    else:
        rows = [[poly(e) for e in row] for row in a]
        if any(len(r) != len(variables) for r in rows):
            raise ShapeError("every row of a needs one entry per variable")
        amat = PolynomialMatrix(len(rows), len(variables), [e for r in rows for e in r], variables)
    return IdeSystem(name, variables, amat, [poly(e) for e in f])


def constraint_only_system(c: ConstraintSet, name: str = "constraints") -> IdeSystem:
    """The system ``0 = phi(x)``."""
    return IdeSystem(name, c.variables, PolynomialMatrix.zeros(len(c), len(c.variables), c.variables), c.generators)


def restrict_by_constraints(s: IdeSystem, c: ConstraintSet, form: str = "appended") -> IdeSystem:
    """Restriction to ``{phi = 0}`` as a system on the ambient chart.

    ``form="appended"`` gives ``(a ⊕ 0, f ⊕ phi)``;
    ``form="appended_with_derivative"`` gives ``(a ⊕ Dphi ⊕ 0, f ⊕ 0 ⊕ phi)``.
    """
    if c.variables is not None and len(c) and c.variables != s.variables:
        raise ValueError(f"constraint variables {c.variables} differ from system variables {s.variables}")
    if not len(c):
        return s
    if form == "appended":
        return direct_sum(s, constraint_only_system(c), name=s.name)
    if form == "appended_with_derivative":
        zeros = [Polynomial.zero(s.variables)] * len(c)
        tangent = IdeSystem("tangent", s.variables, c.jacobian, zeros)
        return direct_sum(direct_sum(s, tangent), constraint_only_system(c), name=s.name)
    raise ValueError(f"unknown restriction form {form!r}")


def pullback(s: IdeSystem, mapping: PolynomialMap, name: str | None = None) -> IdeSystem:
    """``(a∘π · Jπ, f∘π)`` over the map's domain variables."""
    if mapping.arity != s.n:
        raise ValueError(f"map has {mapping.arity} components, system has {s.n} variables")
    y = mapping.domain_variables
    a_pulled = PolynomialMatrix(s.m, s.n, [compose(e, mapping) for e in s.a.entries], y)
    a_new = a_pulled @ mapping.jacobian() if s.m else PolynomialMatrix(0, len(y), [], y)
    f_new = [compose(p, mapping) for p in s.f]
    return IdeSystem(name or s.name, y, a_new, f_new)


def project_range(s: IdeSystem, g: LinearRangeMap | PolynomialMatrix, name: str | None = None) -> IdeSystem:
    """``(g·a, g·f)``.

    ``g`` is a constant map or a polynomial matrix over the system variables
    (row operations whose coefficients depend on the point).
    """
    if isinstance(g, PolynomialMatrix):
        if g.cols != s.m:
            raise ShapeError(f"range map has {g.cols} columns but the system range is {s.m}")
        if g.variables != s.variables:
            raise ShapeError("polynomial range map is not over the system variables")
        fmat = g @ PolynomialMatrix(s.m, 1, s.f, s.variables)
        return IdeSystem(name or s.name, s.variables, g @ s.a, fmat.entries)
    q, cols = g.shape
    if cols != s.m:
        raise ShapeError(f"range map has {cols} columns but the system range is {s.m}")
    a_new = s.a.scale_rows(g.matrix)
    fmat = PolynomialMatrix(s.m, 1, s.f, s.variables).scale_rows(g.matrix)
    return IdeSystem(name or s.name, s.variables, a_new, fmat.entries)


def direct_sum(s1: IdeSystem, s2: IdeSystem, name: str | None = None) -> IdeSystem:
    """Stack the equations of two systems over the same domain."""
    if s1.variables != s2.variables:
        raise ValueError(f"variable lists differ: {s1.variables} vs {s2.variables}")
    a = s1.a.vstack(s2.a)
    return IdeSystem(name or s1.name, s1.variables, a, s1.f + s2.f)


def fresh_name(base: str, taken: Sequence[str]) -> str:
    if base not in taken:
        return base
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def homogenize(s: IdeSystem, time_name: str = "t_hom") -> IdeSystem:
    """The system ``[a(x), -f(x)] (xdot, tdot) = 0`` over ``(x, t)``."""
    t = fresh_name(time_name, s.variables)
    y = s.variables + (t,)
    rows = []
    for i in range(s.m):
        rows.append([e.embed(y) for e in s.a.row(i)] + [(-s.f[i]).embed(y)])
    a = PolynomialMatrix(s.m, len(y), [e for r in rows for e in r], y)
    return IdeSystem(s.name + "_hom", y, a, [Polynomial.zero(y)] * s.m)
