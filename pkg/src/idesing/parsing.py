"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace insignificant)::

    expression ::= ['+'|'-'] term (('+'|'-') term)*
    term       ::= factor ('*' factor)*
    factor     ::= ['-'] base ('^' nonneg-int)?
    base       ::= rational-literal | identifier | '(' expression ')'

Rational literals are integers, decimals (``0.25``) or ``p/q`` with integer
``p`` and ``q``; they are read exactly. Identifiers that name a parameter are
replaced by its rational value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .polynomial import Polynomial

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:/\d+)?|\.\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^()]))"
)


class PolynomialSyntaxError(ValueError):
    """Malformed expression; ``position`` is the character offset of the problem."""

    def __init__(self, message: str, position: int, text: str):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.position = position
        self.text = text


class UnknownIdentifierError(PolynomialSyntaxError):
    pass


@dataclass
class _Token:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise PolynomialSyntaxError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], parameters: Mapping[str, Fraction]):
        self.text = text
        self.variables = tuple(variables)
        self.parameters = parameters
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, cls=PolynomialSyntaxError):
        raise cls(message, self.tok.pos, self.text)

    def eat(self, value: str) -> bool:
        if self.tok.kind == "op" and self.tok.value == value:
            self.i += 1
            return True
        return False

    def parse(self) -> Polynomial:
        result = self.expression()
        if self.tok.kind != "end":
            self.error(f"unexpected token {self.tok.value!r}")
        return result

    def expression(self) -> Polynomial:
        negate = False
        if self.eat("-"):
            negate = True
        else:
            self.eat("+")
        result = self.term()
        if negate:
            result = -result
        while True:
            if self.eat("+"):
                result = result + self.term()
            elif self.eat("-"):
                result = result - self.term()
            else:
                return result

    def term(self) -> Polynomial:
        result = self.factor()
        while self.eat("*"):
            result = result * self.factor()
        return result

    def factor(self) -> Polynomial:
        if self.eat("-"):
            return -self.factor()
        base = self.base()
        if self.eat("^"):
            tok = self.tok
            if tok.kind != "num" or not tok.value.isdigit():
                self.error("exponent must be a non-negative integer")
            self.i += 1
            base = base ** int(tok.value)
        return base

    def base(self) -> Polynomial:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Polynomial.constant(self.variables, _literal(tok.value))
        if tok.kind == "ident":
            self.i += 1
            if tok.value in self.variables:
                return Polynomial.variable(self.variables, tok.value)
            if tok.value in self.parameters:
                return Polynomial.constant(self.variables, self.parameters[tok.value])
            raise UnknownIdentifierError(f"unknown identifier {tok.value!r}", tok.pos, self.text)
        if self.eat("("):
            inner = self.expression()
            if not self.eat(")"):
                self.error("expected ')'")
            return inner
        if tok.kind == "end":
            self.error("unexpected end of expression")
        self.error(f"unexpected token {tok.value!r}")


def _literal(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if "." in num:
            return Fraction(num) / int(den)
        return Fraction(int(num), int(den))
    return Fraction(text)


def parse_polynomial(
    text: str,
    variables: Sequence[str],
    parameters: Mapping[str, object] | None = None,
) -> Polynomial:
    """Parse ``text`` into a canonical polynomial over ``variables``.

    >>> str(parse_polynomial("(z1+z2)^2", ["z1", "z2", "z3"]))
    'z1^2 + 2*z1*z2 + z2^2'
    """
    params = {k: Fraction(v) if not isinstance(v, Fraction) else v for k, v in (parameters or {}).items()}
    clash = set(params) & set(variables)
    if clash:
        raise ValueError(f"names used both as variable and parameter: {sorted(clash)}")
    if not isinstance(text, str):
        raise TypeError("polynomial expression must be a string")
    return _Parser(text, variables, params).parse()


def parse_rational(text: str | int) -> Fraction:
    """Exact rational from ``"p/q"``, a decimal string, or an int."""
    if isinstance(text, int):
        return Fraction(text)
    text = str(text).strip()
    neg = text.startswith("-")
    body = text[1:] if neg else text
    if not re.fullmatch(r"\d+(\.\d*)?(/\d+)?|\.\d+", body):
        raise ValueError(f"not a rational literal: {text!r}")
    value = _literal(body)
    return -value if neg else value
