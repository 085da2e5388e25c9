"""Boolean feature-condition expressions used by annotation dialects.

Grammar: ``expr := NAME | expr AND expr | expr OR expr | NOT expr | (expr)``
with AND binding tighter than OR, and names matching ``[A-Za-z_][A-Za-z0-9_]*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import SplcmapError


class ConditionError(SplcmapError):
    """Syntax error in a feature condition."""


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]


Expr = Union[Var, Not, And, Or]

_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<lpar>\()|(?P<rpar>\)))")
_KEYWORDS = ("AND", "OR", "NOT")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ConditionError(f"unexpected character at position {pos}: {text[pos:]!r}")
            break
        tokens.append(m.group("name") or m.group("lpar") or m.group("rpar"))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], source: str):
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ConditionError(f"unexpected end of condition: {self.source!r}")
        self.pos += 1
        return tok

    def parse_or(self) -> Expr:
        parts = [self.parse_and()]
        while self.peek() == "OR":
            self.take()
            parts.append(self.parse_and())
        if len(parts) == 1:
            return parts[0]
        flat: list[Expr] = []
        for p in parts:
            flat.extend(p.operands if isinstance(p, Or) else [p])
        return Or(tuple(flat))

    def parse_and(self) -> Expr:
        parts = [self.parse_not()]
        while self.peek() == "AND":
            self.take()
            parts.append(self.parse_not())
        if len(parts) == 1:
            return parts[0]
        flat: list[Expr] = []
        for p in parts:
            flat.extend(p.operands if isinstance(p, And) else [p])
        return And(tuple(flat))

    def parse_not(self) -> Expr:
        if self.peek() == "NOT":
            self.take()
            return negate(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.take()
        if tok == "(":
            inner = self.parse_or()
            if self.take() != ")":
                raise ConditionError(f"missing closing parenthesis: {self.source!r}")
            return inner
        if tok in _KEYWORDS or tok == ")":
            raise ConditionError(f"unexpected token {tok!r} in condition: {self.source!r}")
        return Var(tok)


def parse_condition(text: str) -> Expr:
    parser = _Parser(_tokenize(text), text)
    expr = parser.parse_or()
    if parser.peek() is not None:
        raise ConditionError(f"trailing tokens after condition: {text!r}")
    return expr


def negate(expr: Expr) -> Expr:
    """NOT, with double negation collapsed."""
    if isinstance(expr, Not):
        return expr.operand
    return Not(expr)


def conjoin(exprs: list[Expr]) -> Expr:
    """Conjunction of the given expressions, flattened; identity on one."""
    if not exprs:
        raise ConditionError("cannot conjoin zero conditions")
    if len(exprs) == 1:
        return exprs[0]
    flat: list[Expr] = []
    for e in exprs:
        flat.extend(e.operands if isinstance(e, And) else [e])
    return And(tuple(flat))


def _precedence(expr: Expr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def to_text(expr: Expr) -> str:
    """Canonical text form; reparsing it reproduces the expression."""

    def render(e: Expr, min_prec: int) -> str:
        if isinstance(e, Var):
            out = e.name
        elif isinstance(e, Not):
            out = "NOT " + render(e.operand, 4)
        elif isinstance(e, And):
            out = " AND ".join(render(p, 3) for p in e.operands)
        else:
            out = " OR ".join(render(p, 2) for p in e.operands)
        if _precedence(e) < min_prec:
            return "(" + out + ")"
        return out

    return render(expr, 1)


def _collect(expr: Expr, positive: bool, pos: set[str], seen: set[str]) -> None:
    if isinstance(expr, Var):
        seen.add(expr.name)
        if positive:
            pos.add(expr.name)
    elif isinstance(expr, Not):
        _collect(expr.operand, not positive, pos, seen)
    else:
        for p in expr.operands:
            _collect(p, positive, pos, seen)


def positive_names(expr: Expr) -> frozenset[str]:
    """Names with at least one non-negated occurrence."""
    pos: set[str] = set()
    seen: set[str] = set()
    _collect(expr, True, pos, seen)
    return frozenset(pos)


def mentioned_names(expr: Expr) -> frozenset[str]:
    """Every name occurring anywhere in the expression."""
    pos: set[str] = set()
    seen: set[str] = set()
    _collect(expr, True, pos, seen)
    return frozenset(seen)
