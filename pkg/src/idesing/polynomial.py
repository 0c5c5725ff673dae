"""Exact sparse multivariate polynomials over the rationals.

Coefficients are :class:`fractions.Fraction` values, so every symbolic
operation (products, determinants, minors, Jacobians, composition) is exact.
Floating point only appears when a polynomial is evaluated at a float point,
either directly or through :func:`compile_polynomials`.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

MAX_DET_SIZE = 8
# C(8,4)**2: every minor order of an 8x8 matrix stays within this bound.
MAX_MINORS = 4900


class InternalRankError(RuntimeError):
    """Symbolic elimination and sampled ranks disagree."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot use {type(value).__name__} as a rational coefficient")


def _grlex_key(exp: Monomial) -> tuple:
    return (sum(exp), exp)


class Polynomial:
    """A polynomial in a fixed, ordered tuple of variables.

    ``terms`` maps exponent vectors to nonzero rational coefficients. Instances
    are treated as immutable; all arithmetic returns new objects.
    """

    __slots__ = ("variables", "_terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Mapping[Monomial, object] | None = None):
        self.variables = tuple(variables)
        n = len(self.variables)
        clean: dict[Monomial, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n:
                raise ValueError(f"exponent {exp} does not match {n} variables")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _as_fraction(coeff)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, variables: Sequence[str], value) -> "Polynomial":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(variables)

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise KeyError(f"unknown variable {name!r}")
        exp = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exp: 1})

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return dict(self._terms)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(exp) for exp in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(exp) for exp in self._terms)

    def leading_term(self) -> tuple[Monomial, Fraction]:
        exp = max(self._terms, key=_grlex_key)
        return exp, self._terms[exp]

    def used_variables(self) -> set[str]:
        used = set()
        for exp in self._terms:
            used.update(v for v, e in zip(self.variables, exp) if e)
        return used

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise ValueError(
                    f"variable lists differ: {self.variables} vs {other.variables}"
                )
            return other
        return Polynomial.constant(self.variables, _as_fraction(other))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, 0) + c
        return Polynomial(self.variables, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.variables, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self.variables)
            return Polynomial(self.variables, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial(self.variables, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return self.exact_div(other)
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def exact_div(self, divisor: "Polynomial") -> "Polynomial":
        """Quotient of an exact division; raises ``ArithmeticError`` otherwise."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if divisor.is_constant():
            return self * (1 / divisor.constant_value())
        lead_exp, lead_c = divisor.leading_term()
        remainder = dict(self._terms)
        quotient: dict[Monomial, Fraction] = {}
        while remainder:
            exp = max(remainder, key=_grlex_key)
            diff = tuple(a - b for a, b in zip(exp, lead_exp))
            if any(d < 0 for d in diff):
                raise ArithmeticError("division is not exact")
            factor = remainder[exp] / lead_c
            quotient[diff] = factor
            for e, c in divisor._terms.items():
                key = tuple(a + b for a, b in zip(e, diff))
                v = remainder.get(key, 0) - factor * c
                if v:
                    remainder[key] = v
                else:
                    remainder.pop(key, None)
        return Polynomial(self.variables, quotient)

    # comparison
    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self._terms == other._terms
        try:
            c = _as_fraction(other)
        except TypeError:
            return NotImplemented
        return self.is_constant() and self.constant_value() == c

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self._terms.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    # calculus and substitution
    def differentiate(self, var: str) -> "Polynomial":
        if var not in self.variables:
            raise KeyError(f"unknown variable {var!r}")
        k = self.variables.index(var)
        out = {}
        for exp, c in self._terms.items():
            if exp[k]:
                new = list(exp)
                new[k] -= 1
                out[tuple(new)] = c * exp[k]
        return Polynomial(self.variables, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.differentiate(v) for v in self.variables]

    def evaluate(self, point: Sequence) -> Fraction | float:
        """Direct term-by-term evaluation.

        Exact (a ``Fraction``) when every coordinate is an int or Fraction,
        a float otherwise.
        """
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.nvars}")
        exact = all(isinstance(v, (int, Fraction, np.integer)) for v in point)
        if exact:
            pt = [Fraction(int(v)) if isinstance(v, (int, np.integer)) else v for v in point]
            total = Fraction(0)
        else:
            pt = [float(v) for v in point]
            total = 0.0
        for exp, c in self._terms.items():
            term = c if exact else float(c)
            for v, e in zip(pt, exp):
                if e:
                    term = term * v**e
            total += term
        return total

    def rename(self, variables: Sequence[str]) -> "Polynomial":
        """Same terms over a new list of variable names of equal length."""
        if len(variables) != self.nvars:
            raise ValueError("renaming must keep the number of variables")
        return Polynomial(variables, self._terms)

    def embed(self, variables: Sequence[str]) -> "Polynomial":
        """Re-express over a larger (or reordered) variable list."""
        variables = tuple(variables)
        missing = [v for v in self.used_variables() if v not in variables]
        if missing:
            raise ValueError(f"variables {missing} not present in target list")
        index = [variables.index(v) if v in variables else None for v in self.variables]
        out = {}
        for exp, c in self._terms.items():
            new = [0] * len(variables)
            for k, e in zip(index, exp):
                if e:
                    new[k] = e
            out[tuple(new)] = c
        return Polynomial(variables, out)

    def content(self) -> Fraction:
        """Positive rational g with self / g having coprime integer coefficients."""
        if not self._terms:
            return Fraction(0)
        from math import gcd, lcm

        num = 0
        den = 1
        for c in self._terms.values():
            num = gcd(num, c.numerator)
            den = lcm(den, c.denominator)
        return Fraction(num, den)

    def sign_normalized(self) -> "Polynomial":
        """``±self`` with a positive leading coefficient (grlex order)."""
        if not self._terms:
            return self
        return -self if self.leading_term()[1] < 0 else self

    def primitive(self) -> "Polynomial":
        """Sign-normalized polynomial divided by its content."""
        if not self._terms:
            return self
        return self.sign_normalized() * (1 / self.content())

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r}, vars={list(self.variables)})"

    def __str__(self) -> str:
        return format_polynomial(self)


def format_polynomial(p: Polynomial) -> str:
    """Render in the parser grammar; ``parse_polynomial`` inverts this."""
    if p.is_zero():
        return "0"
    pieces = []
    for exp in sorted(p._terms, key=_grlex_key, reverse=True):
        c = p._terms[exp]
        factors = []
        for v, e in zip(p.variables, exp):
            if e == 1:
                factors.append(v)
            elif e > 1:
                factors.append(f"{v}^{e}")
        mag = abs(c)
        coeff = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
        if factors:
            body = "*".join(factors) if mag == 1 else coeff + "*" + "*".join(factors)
        else:
            body = coeff
        pieces.append(("-" if c < 0 else "+", body))
    sign, body = pieces[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


class PolynomialMatrix:
    """Row-major matrix of polynomials sharing one variable list."""

    __slots__ = ("rows", "cols", "variables", "entries")

    def __init__(self, rows: int, cols: int, entries: Sequence[Polynomial], variables: Sequence[str] | None = None):
        entries = tuple(entries)
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        if variables is None:
            if not entries:
                raise ValueError("an empty matrix needs an explicit variable list")
            variables = entries[0].variables
        variables = tuple(variables)
        for e in entries:
            if e.variables != variables:
                raise ValueError("matrix entries must share one variable list")
        self.rows = rows
        self.cols = cols
        self.variables = variables
        self.entries = entries

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Polynomial]], variables: Sequence[str] | None = None) -> "PolynomialMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), ncols, [e for r in rows for e in r], variables)

    @classmethod
    def zeros(cls, rows: int, cols: int, variables: Sequence[str]) -> "PolynomialMatrix":
        return cls(rows, cols, [Polynomial.zero(variables)] * (rows * cols), variables)

    @classmethod
    def identity(cls, n: int, variables: Sequence[str]) -> "PolynomialMatrix":
        one = Polynomial.constant(variables, 1)
        zero = Polynomial.zero(variables)
        return cls(n, n, [one if i == j else zero for i in range(n) for j in range(n)], variables)

    def __getitem__(self, index: tuple[int, int]) -> Polynomial:
        i, j = index
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list[Polynomial]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list[list[Polynomial]]:
        return [self.row(i) for i in range(self.rows)]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolynomialMatrix":
        return PolynomialMatrix(
            len(rows), len(cols), [self[i, j] for i in rows for j in cols], self.variables
        )

    def hstack(self, other: "PolynomialMatrix") -> "PolynomialMatrix":
        if other.rows != self.rows:
            raise ValueError("row counts differ")
        return PolynomialMatrix.from_rows(
            [a + b for a, b in zip(self.to_rows(), other.to_rows())], self.variables
        )

    def vstack(self, other: "PolynomialMatrix") -> "PolynomialMatrix":
        if other.cols != self.cols:
            raise ValueError("column counts differ")
        return PolynomialMatrix(
            self.rows + other.rows, self.cols, self.entries + other.entries, self.variables
        )

    def __matmul__(self, other: "PolynomialMatrix") -> "PolynomialMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimensions differ")
        out = []
        zero = Polynomial.zero(self.variables)
        for i in range(self.rows):
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    a, b = self[i, k], other[k, j]
                    if a and b:
                        acc = acc + a * b
                out.append(acc)
        return PolynomialMatrix(self.rows, other.cols, out, self.variables)

    def scale_rows(self, matrix: np.ndarray | Sequence[Sequence]) -> "PolynomialMatrix":
        """Left-multiply by a constant (rational or float) matrix."""
        g = [[_as_fraction(v) for v in row] for row in matrix]
        if any(len(r) != self.rows for r in g):
            raise ValueError("constant matrix column count must equal row count")
        zero = Polynomial.zero(self.variables)
        out = []
        for gi in g:
            for j in range(self.cols):
                acc = zero
                for k, c in enumerate(gi):
                    if c and self[k, j]:
                        acc = acc + self[k, j] * c
                out.append(acc)
        return PolynomialMatrix(len(g), self.cols, out, self.variables)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def evaluate(self, point: Sequence) -> np.ndarray:
        return compile_matrix(self)(np.asarray(point, dtype=float))

    def evaluate_exact(self, point: Sequence) -> list[list[Fraction]]:
        return [[e.evaluate(point) for e in self.row(i)] for i in range(self.rows)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolynomialMatrix)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self) -> str:
        body = "; ".join(", ".join(str(e) for e in r) for r in self.to_rows())
        return f"PolynomialMatrix({self.rows}x{self.cols}: [{body}])"


class PolynomialMap:
    """A polynomial map R^p -> R^n given by its components over ``domain_variables``."""

    __slots__ = ("domain_variables", "components")

    def __init__(self, domain_variables: Sequence[str], components: Sequence[Polynomial]):
        self.domain_variables = tuple(domain_variables)
        comps = tuple(components)
        for c in comps:
            if c.variables != self.domain_variables:
                raise ValueError("map components must use the domain variables")
        self.components = comps

    @classmethod
    def identity(cls, variables: Sequence[str]) -> "PolynomialMap":
        return cls(variables, [Polynomial.variable(variables, v) for v in variables])

    @property
    def arity(self) -> int:
        return len(self.components)

    def jacobian(self) -> PolynomialMatrix:
        return PolynomialMatrix.from_rows(
            [c.gradient() for c in self.components], self.domain_variables
        )

    def after(self, inner: "PolynomialMap") -> "PolynomialMap":
        """The composite ``self ∘ inner``."""
        return PolynomialMap(inner.domain_variables, [compose(c, inner) for c in self.components])

    def evaluate(self, point: Sequence) -> np.ndarray:
        return compile_polynomials(self.components)(np.asarray(point, dtype=float))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolynomialMap)
            and self.domain_variables == other.domain_variables
            and self.components == other.components
        )

    def __hash__(self) -> int:
        return hash((self.domain_variables, self.components))

    def __repr__(self) -> str:
        return f"PolynomialMap({list(self.domain_variables)} -> [{', '.join(map(str, self.components))}])"


def compose(p: Polynomial, mapping: PolynomialMap) -> Polynomial:
    """Substitute the map's components for the variables of ``p``."""
    if mapping.arity != p.nvars:
        raise ValueError(
            f"map has {mapping.arity} components but polynomial has {p.nvars} variables"
        )
    variables = mapping.domain_variables
    powers: dict[tuple[int, int], Polynomial] = {}

    def power(k: int, e: int) -> Polynomial:
        key = (k, e)
        if key not in powers:
            powers[key] = mapping.components[k] ** e
        return powers[key]

    result = Polynomial.zero(variables)
    for exp, c in p.terms.items():
        term = Polynomial.constant(variables, c)
        for k, e in enumerate(exp):
            if e:
                term = term * power(k, e)
        result = result + term
    return result


# ---------------------------------------------------------------------------
# numeric evaluation


def compile_polynomials(polys: Sequence[Polynomial]) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized float evaluator for a list of polynomials over shared variables.

    The returned function accepts a point of shape ``(n,)`` (returning shape
    ``(len(polys),)``) or a batch of shape ``(N, n)`` (returning ``(N, len(polys))``).
    """
    polys = list(polys)
    nvars = polys[0].nvars if polys else 0
    monomials: dict[Monomial, int] = {}
    rows, cols, vals = [], [], []
    for j, p in enumerate(polys):
        for exp, c in p.terms.items():
            k = monomials.setdefault(exp, len(monomials))
            rows.append(k)
            cols.append(j)
            vals.append(float(c))
    exps = np.array(list(monomials), dtype=np.int64).reshape(len(monomials), nvars)
    coeffs = np.zeros((len(monomials), len(polys)))
    np.add.at(coeffs, (rows, cols), vals)

    def evaluate(points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != nvars:
            raise ValueError(f"expected {nvars} coordinates, got {x.shape[1]}")
        if not monomials:
            out = np.zeros((x.shape[0], len(polys)))
        else:
            mono = np.prod(x[:, None, :] ** exps[None, :, :], axis=2)
            out = mono @ coeffs
        return out[0] if single else out

    return evaluate


def compile_matrix(m: PolynomialMatrix) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluator returning ``(rows, cols)`` for a point or ``(N, rows, cols)`` for a batch."""
    flat = compile_polynomials(m.entries) if m.entries else None
    shape = (m.rows, m.cols)

    def evaluate(points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if flat is None:
            return np.zeros(shape if x.ndim == 1 else (x.shape[0],) + shape)
        vals = flat(x)
        return vals.reshape(shape if x.ndim == 1 else (x.shape[0],) + shape)

    return evaluate


# ---------------------------------------------------------------------------
# determinants, minors, rank


def _cofactor_det(rows: list[list[Polynomial]], variables) -> Polynomial:
    n = len(rows)
    if n == 0:
        return Polynomial.constant(variables, 1)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    # expand along the row with the most zeros
    r = max(range(n), key=lambda i: sum(1 for e in rows[i] if e.is_zero()))
    total = Polynomial.zero(variables)
    for j, entry in enumerate(rows[r]):
        if entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for i, row in enumerate(rows) if i != r]
        term = entry * _cofactor_det(minor, variables)
        total = total + term if (r + j) % 2 == 0 else total - term
    return total


def _bareiss_det(rows: list[list[Polynomial]], variables) -> Polynomial:
    m = [list(r) for r in rows]
    n = len(m)
    sign = 1
    prev = Polynomial.constant(variables, 1)
    for k in range(n - 1):
        pivot = next((i for i in range(k, n) if not m[i][k].is_zero()), None)
        if pivot is None:
            return Polynomial.zero(variables)
        if pivot != k:
            m[k], m[pivot] = m[pivot], m[k]
            sign = -sign
        pk = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * pk - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev) if num else num
            m[i][k] = Polynomial.zero(variables)
        prev = pk
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det


def determinant(m: PolynomialMatrix, method: str = "auto", limit: int = MAX_DET_SIZE) -> Polynomial:
    """Exact determinant.

    ``method`` is ``"cofactor"``, ``"bareiss"`` or ``"auto"`` (cofactor
    expansion up to 4x4, fraction-free elimination beyond).
    """
    if m.rows != m.cols:
        raise ValueError(f"determinant of a non-square {m.rows}x{m.cols} matrix")
    if m.rows > limit:
        raise ValueError(f"{m.rows}x{m.rows} exceeds the determinant size limit {limit}")
    rows = m.to_rows()
    if any(all(e.is_zero() for e in r) for r in rows):
        return Polynomial.zero(m.variables)
    if method == "auto":
        method = "cofactor" if m.rows <= 4 else "bareiss"
    if method == "cofactor":
        return _cofactor_det(rows, m.variables)
    if method == "bareiss":
        if m.rows == 0:
            return Polynomial.constant(m.variables, 1)
        return _bareiss_det(rows, m.variables)
    raise ValueError(f"unknown determinant method {method!r}")


def minors_of_order(m: PolynomialMatrix, k: int, max_count: int = MAX_MINORS) -> list[Polynomial]:
    """All nonzero k x k minors, deduplicated up to sign.

    Returned polynomials are sign-normalized (positive leading coefficient)
    and listed in first-encounter order.
    """
    if not 1 <= k <= min(m.rows, m.cols):
        raise ValueError(f"minor order {k} out of range for a {m.rows}x{m.cols} matrix")
    count = comb(m.rows, k) * comb(m.cols, k)
    if count > max_count:
        raise ValueError(f"{count} minors of order {k} exceed the enumeration limit {max_count}")
    nonzero_rows = [i for i in range(m.rows) if any(not m[i, j].is_zero() for j in range(m.cols))]
    nonzero_cols = [j for j in range(m.cols) if any(not m[i, j].is_zero() for i in range(m.rows))]
    seen: dict[Polynomial, None] = {}
    if len(nonzero_rows) < k or len(nonzero_cols) < k:
        return []
    for rs in itertools.combinations(nonzero_rows, k):
        for cs in itertools.combinations(nonzero_cols, k):
            sub = m.submatrix(rs, cs)
            if any(all(sub[i, j].is_zero() for j in range(k)) for i in range(k)):
                continue
            if any(all(sub[i, j].is_zero() for i in range(k)) for j in range(k)):
                continue
            d = determinant(sub)
            if d:
                seen.setdefault(d.sign_normalized(), None)
    return list(seen)


def random_rational_point(nvars: int, rng: random.Random, spread: int = 1000) -> list[Fraction]:
    return [Fraction(rng.randint(-spread, spread), rng.randint(1, 97)) for _ in range(nvars)]


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a rational matrix by exact Gaussian elimination."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    rank = 0
    ncols = len(m[0])
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for i in range(rank + 1, len(m)):
            if m[i][col] != 0:
                factor = m[i][col] / p
                for j in range(col, ncols):
                    m[i][j] -= factor * m[rank][j]
        rank += 1
        if rank == len(m):
            break
    return rank


def _confirm_nonzero(p: Polynomial, rng: random.Random, attempts: int = 4) -> bool:
    for _ in range(attempts):
        if p.evaluate(random_rational_point(p.nvars, rng)) != 0:
            return True
    return False


def generic_rank(m: PolynomialMatrix, samples: int = 5, seed: int = 0) -> int:
    """Rank over the field of rational functions.

    Fraction-free elimination decides the rank symbolically; the result is
    cross-checked against exact ranks at ``samples`` random rational points.
    """
    rng = random.Random(seed)
    rows = m.to_rows()
    zero = Polynomial.zero(m.variables)
    prev = Polynomial.constant(m.variables, 1)
    rank = 0
    for col in range(m.cols):
        if rank == m.rows:
            break
        pivot = None
        for i in range(rank, m.rows):
            if not rows[i][col].is_zero():
                if not _confirm_nonzero(rows[i][col], rng):
                    raise InternalRankError(
                        f"entry {rows[i][col]} is symbolically nonzero but vanished at every sample"
                    )
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pk = rows[rank][col]
        for i in range(rank + 1, m.rows):
            lead = rows[i][col]
            for j in range(col + 1, m.cols):
                num = rows[i][j] * pk - lead * rows[rank][j]
                rows[i][j] = num.exact_div(prev) if num else num
            rows[i][col] = zero
        prev = pk
        rank += 1
    sampled = 0
    for _ in range(samples):
        pt = random_rational_point(len(m.variables), rng)
        sampled = max(sampled, exact_rank(m.evaluate_exact(pt)))
    if samples and sampled != rank:
        raise InternalRankError(f"symbolic rank {rank} but sampled rank {sampled}")
    return rank
