"""Propositional formulas over named Boolean variables.

Formulas are immutable trees built from constants, literals, negation and
n-ary conjunction/disjunction.  Connectives may have any arity of at least
two, and nesting is preserved exactly as written, because the
structural-equation compiler reads meaning into the tree shape.  The
:func:`binarize` pass rewrites wide conjunctions into the binary shape the
compiler consumes; disjunctions may stay wide.

The module also provides the exhaustive-enumeration primitives (``models``)
that the circuit validators use as their ground-truth oracle, and the small
text grammar used by the command line and the SEM file format:

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := '!' factor | '(' expr ')' | 'true' | 'false' | IDENT

``!`` binds tighter than ``&``, which binds tighter than ``|``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EnumerationLimitError, ParseError

# Enumeration-based operations refuse universes larger than this.
MAX_ENUM_VARS = 20


@dataclass(frozen=True, order=True)
class Var:
    """A Boolean variable with a stable id and a display name."""

    id: int
    name: str


# An assignment maps variables to truth values; it may be partial.
Assignment = dict[Var, bool]


class Formula:
    """Base class for formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    __slots__ = ()


@dataclass(frozen=True)
class Bottom(Formula):
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Formula):
    var: Var
    positive: bool = True


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And requires at least two children")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or requires at least two children")


TRUE = Top()
FALSE = Bottom()


def lit(var: Var, positive: bool = True) -> Lit:
    return Lit(var, positive)


def conj(*fs: Formula) -> Formula:
    """N-ary conjunction; folds constants but keeps nesting as written.

    Nested conjunctions are not flattened on purpose: the compiler reads the
    tree shape, so (a & b) & (c & d) must stay distinct from a & b & c & d.
    """
    children: list[Formula] = []
    for f in fs:
        if isinstance(f, Bottom):
            return FALSE
        if isinstance(f, Top):
            continue
        children.append(f)
    if not children:
        return TRUE
    if len(children) == 1:
        return children[0]
    return And(tuple(children))


def disj(*fs: Formula) -> Formula:
    """N-ary disjunction; folds constants but keeps nesting as written."""
    children: list[Formula] = []
    for f in fs:
        if isinstance(f, Top):
            return TRUE
        if isinstance(f, Bottom):
            continue
        children.append(f)
    if not children:
        return FALSE
    if len(children) == 1:
        return children[0]
    return Or(tuple(children))


def neg(f: Formula) -> Formula:
    """Negation; folds constants, literal polarity and double negation."""
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    if isinstance(f, Lit):
        return Lit(f.var, not f.positive)
    if isinstance(f, Not):
        return f.child
    return Not(f)


def variables(f: Formula) -> frozenset[Var]:
    """The set of variables occurring in f."""
    if isinstance(f, Lit):
        return frozenset((f.var,))
    if isinstance(f, Not):
        return variables(f.child)
    if isinstance(f, (And, Or)):
        out: frozenset[Var] = frozenset()
        for c in f.children:
            out |= variables(c)
        return out
    return frozenset()


def evaluate(f: Formula, a: Mapping[Var, bool]) -> bool:
    """Evaluate f under a total assignment of its variables.

    Raises ValueError naming the variable if one occurring in f is
    unassigned.  Children are always fully evaluated, so the error does not
    depend on short-circuit order.
    """
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Lit):
        try:
            value = a[f.var]
        except KeyError:
            raise ValueError(f"variable '{f.var.name}' is unassigned") from None
        return value if f.positive else not value
    if isinstance(f, Not):
        return not evaluate(f.child, a)
    if isinstance(f, And):
        values = [evaluate(c, a) for c in f.children]
        return all(values)
    if isinstance(f, Or):
        values = [evaluate(c, a) for c in f.children]
        return any(values)
    raise TypeError(f"not a formula: {f!r}")


def assignments(universe: Iterable[Var]) -> list[Assignment]:
    """All total assignments over the universe, in lexicographic order.

    Variables are ordered by id and False sorts before True, so the result
    order is reproducible across runs.
    """
    vs = sorted(universe)
    if len(vs) > MAX_ENUM_VARS:
        raise EnumerationLimitError(
            f"cannot enumerate assignments over {len(vs)} variables "
            f"(limit {MAX_ENUM_VARS})")
    if len(set(vs)) != len(vs):
        raise ValueError("universe contains duplicate variables")
    return [dict(zip(vs, bits))
            for bits in itertools.product((False, True), repeat=len(vs))]


def models(f: Formula, universe: Iterable[Var]) -> list[Assignment]:
    """All total assignments over the universe that satisfy f.

    The universe must cover every variable of f.  Enumeration is bounded by
    MAX_ENUM_VARS; this is the ground-truth oracle the circuit validators
    lean on, so it favours obviousness over speed.
    """
    vs = list(universe)
    missing = variables(f) - set(vs)
    if missing:
        names = ", ".join(sorted(v.name for v in missing))
        raise ValueError(f"universe does not cover variable(s): {names}")
    return [a for a in assignments(vs) if evaluate(f, a)]


def simplify(f: Formula) -> Formula:
    """Eliminate constants bottom-up until no rule applies.

    Rules: x&false -> false, x&true -> x, x|false -> x, x|true -> true,
    !true -> false, !false -> true, plus collapsing of empty and singleton
    connectives.  The result contains no Top/Bottom unless it is itself a
    constant.
    """
    if isinstance(f, Not):
        return neg(simplify(f.child))
    if isinstance(f, And):
        return conj(*(simplify(c) for c in f.children))
    if isinstance(f, Or):
        return disj(*(simplify(c) for c in f.children))
    return f


def substitute(f: Formula, partial: Mapping[Var, bool]) -> Formula:
    """Replace literals of assigned variables by constants and simplify."""
    def walk(g: Formula) -> Formula:
        if isinstance(g, Lit):
            if g.var in partial:
                value = partial[g.var] if g.positive else not partial[g.var]
                return TRUE if value else FALSE
            return g
        if isinstance(g, Not):
            return neg(walk(g.child))
        if isinstance(g, And):
            return conj(*(walk(c) for c in g.children))
        if isinstance(g, Or):
            return disj(*(walk(c) for c in g.children))
        return g
    return walk(f)


def nnf(f: Formula) -> Formula:
    """Negation normal form: push negations down to literals."""
    if isinstance(f, Not):
        c = f.child
        if isinstance(c, Not):
            return nnf(c.child)
        if isinstance(c, And):
            return disj(*(nnf(Not(x)) for x in c.children))
        if isinstance(c, Or):
            return conj(*(nnf(Not(x)) for x in c.children))
        # remaining children are literals or constants; neg folds those
        return neg(c)
    if isinstance(f, And):
        return conj(*(nnf(c) for c in f.children))
    if isinstance(f, Or):
        return disj(*(nnf(c) for c in f.children))
    return f


def binarize(f: Formula) -> Formula:
    """Rewrite wide conjunctions into left-nested binary ones.

    Disjunctions keep their arity: the structural-equation compiler creates
    one child per disjunct, so only conjunctions need the binary shape.
    """
    if isinstance(f, Not):
        return Not(binarize(f.child))
    if isinstance(f, Or):
        return Or(tuple(binarize(c) for c in f.children))
    if isinstance(f, And):
        parts = [binarize(c) for c in f.children]
        out = parts[0]
        for p in parts[1:]:
            out = And((out, p))
        return out
    return f


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()]))")


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r} in formula")
        tokens.append(m.group("ident") or m.group("op"))
        pos = m.end()
    return tokens


def parse_formula(text: str, universe: Iterable[Var]) -> Formula:
    """Parse the text grammar against a universe of known variables."""
    by_name: dict[str, Var] = {}
    for v in universe:
        if v.name in by_name:
            raise ValueError(f"duplicate variable name '{v.name}'")
        by_name[v.name] = v
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of formula")
        pos += 1
        return tokens[pos - 1]

    def parse_or() -> Formula:
        parts = [parse_and()]
        while peek() == "|":
            take()
            parts.append(parse_and())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def parse_and() -> Formula:
        parts = [parse_factor()]
        while peek() == "&":
            take()
            parts.append(parse_factor())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def parse_factor() -> Formula:
        tok = take()
        if tok == "!":
            return neg(parse_factor())
        if tok == "(":
            inner = parse_or()
            if peek() != ")":
                raise ParseError("missing closing parenthesis in formula")
            take()
            return inner
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in ("&", "|", ")"):
            raise ParseError(f"unexpected '{tok}' in formula")
        if tok not in by_name:
            raise ParseError(f"unknown variable '{tok}' in formula")
        return Lit(by_name[tok])

    if not tokens:
        raise ParseError("empty formula")
    result = parse_or()
    if pos != len(tokens):
        raise ParseError(f"trailing input after formula: '{tokens[pos]}'")
    return result


def format_formula(f: Formula) -> str:
    """Render a formula in the text grammar with minimal parentheses."""
    def walk(g: Formula, parent: str) -> str:
        if isinstance(g, Top):
            return "true"
        if isinstance(g, Bottom):
            return "false"
        if isinstance(g, Lit):
            return g.var.name if g.positive else "!" + g.var.name
        if isinstance(g, Not):
            inner = walk(g.child, "not")
            if isinstance(g.child, (And, Or)):
                return "!(" + walk(g.child, "top") + ")"
            return "!" + inner
        if isinstance(g, And):
            s = " & ".join(walk(c, "and") for c in g.children)
            # Parenthesize under '!' and under another '&': nesting of equal
            # operators is meaningful to the compiler and must round-trip.
            return "(" + s + ")" if parent in ("and", "not") else s
        if isinstance(g, Or):
            s = " | ".join(walk(c, "or") for c in g.children)
            return "(" + s + ")" if parent in ("and", "or", "not") else s
        raise TypeError(f"not a formula: {g!r}")
    return walk(f, "top")


def parse_assignment(text: str, universe: Iterable[Var]) -> Assignment:
    """Parse 'NAME=0,NAME=1' lists; the empty string is the empty assignment."""
    by_name = {v.name: v for v in universe}
    out: Assignment = {}
    text = text.strip()
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if "=" not in item:
            raise ParseError(f"expected NAME=0|1, got '{item}'")
        name, _, value = item.partition("=")
        name, value = name.strip(), value.strip()
        if name not in by_name:
            raise ParseError(f"unknown variable '{name}' in assignment")
        if value not in ("0", "1"):
            raise ParseError(f"value for '{name}' must be 0 or 1, got '{value}'")
        var = by_name[name]
        if var in out:
            raise ParseError(f"variable '{name}' assigned twice")
        out[var] = value == "1"
    return out


def format_assignment(a: Mapping[Var, bool]) -> str:
    return ",".join(f"{v.name}={int(b)}" for v, b in sorted(a.items()))
