"""Deterministic Boolean structural equation models.

A model carries exogenous variables U with a tabular joint distribution,
endogenous variables V, and one propositional equation per endogenous
variable over its parents.  All randomness lives in U; solving the
equations in topological order turns a U-assignment into a full world, and
the push-forward of the U-distribution is the model's joint.

Two intervention semantics are provided side by side and are not
interchangeable:

* surgery: replace the target equations by constants and recompute
  (``intervene_surgery`` / ``interventional_surgery_prob``);
* adjustment: the parent-stratified sum
  sum_pa Pr(y | x, pa) Pr(pa), with strata of probability zero
  contributing zero (``interventional_adjustment_prob``).

Under deterministic equations the two can disagree; the adjustment form
always equals the factual joint probability Pr(y, x), which is part of the
test suite's invariants.  Counterfactuals follow the classic three steps:
abduction (Bayes-condition the U-distribution on evidence), action
(surgery) and prediction.

The text format::

    var <name> exo|endo        # declaration order fixes bit positions
    eq <name> = <formula>      # one per endogenous variable
    dist                       # start of the exogenous table
    <bits> <probability>       # bits follow exo declaration order

Unlisted exogenous assignments have probability zero.  '#' comments and
blank lines are allowed anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from typing import Iterable, Mapping

from .errors import EnumerationLimitError, ParseError, ZeroEvidenceError
from .formula import (
    Assignment,
    Formula,
    Var,
    evaluate,
    format_formula,
    parse_formula,
    substitute,
    variables,
)
from .graph import CausalGraph

MAX_JOINT_WORLDS = 2 ** 20

DIST_TOL = 1e-12


@dataclass(frozen=True)
class TabularDistribution:
    """A sparse table over a tuple of variables.

    Keys are value tuples in universe order; assignments that are absent
    have probability zero.  The table must sum to one.
    """

    universe: tuple[Var, ...]
    probs: Mapping[tuple[bool, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        names = [v.name for v in self.universe]
        if len(set(names)) != len(names):
            raise ValueError("distribution universe has duplicate names")
        n = len(self.universe)
        total = 0.0
        for key, p in self.probs.items():
            if len(key) != n:
                raise ValueError(
                    f"table key {key!r} does not match universe size {n}")
            if p < 0.0 or not math.isfinite(p):
                raise ValueError(f"probability {p!r} is not in [0, 1]")
            total += p
        if abs(total - 1.0) > DIST_TOL:
            raise ValueError(f"table sums to {total!r}, expected 1")

    def prob(self, a: Mapping[Var, bool]) -> float:
        """Probability of a total assignment over the universe."""
        key = tuple(a[v] for v in self.universe)
        return self.probs.get(key, 0.0)

    def items(self) -> Iterable[tuple[Assignment, float]]:
        """Positive-probability rows as assignments, deterministic order."""
        for key in sorted(self.probs):
            p = self.probs[key]
            if p > 0.0:
                yield dict(zip(self.universe, key)), p

    def marginal_mass(self, partial: Mapping[Var, bool]) -> float:
        """Total mass of rows consistent with a partial assignment."""
        unknown = set(partial) - set(self.universe)
        if unknown:
            names = ", ".join(sorted(v.name for v in unknown))
            raise ValueError(f"unknown variable(s): {names}")
        idx = {v: i for i, v in enumerate(self.universe)}
        return sum(
            p for key, p in self.probs.items()
            if all(key[idx[v]] == b for v, b in partial.items()))

    def marginal(self, onto: Iterable[Var]) -> "TabularDistribution":
        """Marginal distribution over a subset of the universe."""
        onto = tuple(onto)
        unknown = set(onto) - set(self.universe)
        if unknown:
            names = ", ".join(sorted(v.name for v in unknown))
            raise ValueError(f"unknown variable(s): {names}")
        idx = {v: i for i, v in enumerate(self.universe)}
        out: dict[tuple[bool, ...], float] = {}
        for key, p in self.probs.items():
            if p == 0.0:
                continue
            small = tuple(key[idx[v]] for v in onto)
            out[small] = out.get(small, 0.0) + p
        return TabularDistribution(onto, out)


class Sem:
    """A structural equation model (U, V, equations, exogenous table)."""

    def __init__(self, exogenous: Iterable[Var], endogenous: Iterable[Var],
                 equations: Mapping[Var, Formula],
                 exogenous_dist: TabularDistribution):
        self.exogenous = tuple(exogenous)
        self.endogenous = tuple(endogenous)
        self.equations = dict(equations)
        self.exogenous_dist = exogenous_dist
        all_vars = self.exogenous + self.endogenous
        if len(set(all_vars)) != len(all_vars):
            raise ValueError("exogenous and endogenous variables overlap")
        names = [v.name for v in all_vars]
        if len(set(names)) != len(names):
            raise ValueError("variable names are not unique")
        if set(self.equations) != set(self.endogenous):
            raise ValueError(
                "exactly the endogenous variables must have equations")
        known = set(all_vars)
        for v, f in self.equations.items():
            stray = variables(f) - known
            if stray:
                stray_names = ", ".join(sorted(s.name for s in stray))
                raise ValueError(
                    f"equation for '{v.name}' mentions unknown variable(s): "
                    f"{stray_names}")
        if tuple(exogenous_dist.universe) != self.exogenous:
            raise ValueError(
                "exogenous distribution universe must match the exogenous "
                "variables in order")
        # Building the graph also rejects cyclic equation systems.
        self.graph = CausalGraph(
            tuple(v.name for v in self.exogenous),
            tuple(v.name for v in self.endogenous),
            tuple(sorted({
                (p.name, v.name)
                for v, f in self.equations.items()
                for p in variables(f)})))
        self._by_name = {v.name: v for v in all_vars}
        order = [self._by_name[n] for n in self.graph.topological_order]
        self._solve_order = tuple(v for v in order if v in self.equations)

    def var(self, name: str) -> Var:
        try:
            return self._by_name[name]
        except KeyError:
            raise ValueError(f"unknown variable '{name}'") from None

    def parents(self, v: Var) -> tuple[Var, ...]:
        return tuple(self._by_name[n] for n in self.graph.parents(v.name))


def solve(m: Sem, u: Assignment) -> Assignment:
    """Evaluate the equations in topological order for one U-assignment."""
    if set(u) != set(m.exogenous):
        raise ValueError("need a total assignment over the exogenous "
                         "variables, nothing else")
    world: Assignment = dict(u)
    for v in m._solve_order:
        world[v] = evaluate(m.equations[v], world)
    return world


def joint(m: Sem) -> TabularDistribution:
    """Push-forward of the exogenous table: the joint over U and V."""
    if len(m.exogenous_dist.probs) > MAX_JOINT_WORLDS:
        raise EnumerationLimitError(
            f"exogenous table has {len(m.exogenous_dist.probs)} rows "
            f"(limit {MAX_JOINT_WORLDS})")
    universe = m.exogenous + m.endogenous
    out: dict[tuple[bool, ...], float] = {}
    for u, p in m.exogenous_dist.items():
        world = solve(m, u)
        key = tuple(world[v] for v in universe)
        out[key] = out.get(key, 0.0) + p
    return TabularDistribution(universe, out)


def intervene_surgery(m: Sem, do: Assignment) -> Sem:
    """Replace the equation of every target by a constant; returns a new
    model and leaves the input untouched."""
    from .formula import FALSE, TRUE

    if not do:
        raise ValueError("intervention assignment is empty")
    endo = set(m.endogenous)
    for v in do:
        if v in set(m.exogenous):
            raise ValueError(
                f"cannot intervene on exogenous variable '{v.name}'")
        if v not in endo:
            raise ValueError(f"unknown intervention target '{v.name}'")
    equations = dict(m.equations)
    for v, b in do.items():
        equations[v] = TRUE if b else FALSE
    return Sem(m.exogenous, m.endogenous, equations, m.exogenous_dist)


def interventional_surgery_prob(m: Sem, query: Assignment,
                                do: Assignment) -> float:
    """Pr(query) in the surgically modified model."""
    return joint(intervene_surgery(m, do)).marginal_mass(query)


def interventional_adjustment_prob(m: Sem, query: Assignment,
                                   do: Assignment) -> float:
    """Parent-adjusted interventional probability for a single target.

    Computes sum over parent strata of Pr(query | do-value, parents) times
    Pr(parents); a stratum where the conditioning event (target value and
    parent values together) has probability zero contributes zero.
    """
    if len(do) != 1 or len(query) != 1:
        raise ValueError(
            "adjustment semantics is defined for a single intervened "
            "variable and a single query variable")
    (x, x_val), = do.items()
    if x in set(m.exogenous):
        raise ValueError(f"cannot intervene on exogenous variable '{x.name}'")
    if x not in set(m.endogenous):
        raise ValueError(f"unknown intervention target '{x.name}'")
    dist = joint(m)
    total = 0.0
    parents = m.parents(x)
    for bits in _bit_tuples(len(parents)):
        pa = dict(zip(parents, bits))
        pa_mass = dist.marginal_mass(pa)
        if pa_mass == 0.0:
            continue
        cond = dict(pa)
        cond[x] = x_val
        cond_mass = dist.marginal_mass(cond)
        if cond_mass == 0.0:
            continue
        # a query variable may itself be a parent or the target; a stratum
        # that contradicts the query contributes zero, it is not re-assigned
        if any(v in cond and cond[v] != b for v, b in query.items()):
            continue
        both = dict(cond)
        both.update(query)
        total += dist.marginal_mass(both) / cond_mass * pa_mass
    return total


def _bit_tuples(n: int):
    import itertools
    return itertools.product((False, True), repeat=n)


def abduct(m: Sem, evidence: Assignment) -> TabularDistribution:
    """Posterior over U given endogenous evidence.

    Worlds incompatible with the evidence get probability zero and the rest
    is rescaled; evidence of probability zero is an error.
    """
    endo = set(m.endogenous)
    stray = set(evidence) - endo
    if stray:
        names = ", ".join(sorted(v.name for v in stray))
        raise ValueError(f"evidence must be endogenous, got: {names}")
    kept: dict[tuple[bool, ...], float] = {}
    norm = 0.0
    for u, p in m.exogenous_dist.items():
        world = solve(m, u)
        if all(world[v] == b for v, b in evidence.items()):
            key = tuple(u[v] for v in m.exogenous)
            kept[key] = kept.get(key, 0.0) + p
            norm += p
    if norm <= 0.0:
        raise ZeroEvidenceError(
            "evidence has probability zero; abduction is undefined")
    return TabularDistribution(
        m.exogenous, {k: p / norm for k, p in kept.items()})


def counterfactual(m: Sem, query: Assignment, do: Assignment,
                   evidence: Assignment) -> float:
    """Abduction, action, prediction."""
    posterior = abduct(m, evidence)
    twin = Sem(m.exogenous, m.endogenous, m.equations, posterior)
    return interventional_surgery_prob(twin, query, do)


def cpd(m: Sem, x: Var, given: Assignment) -> float:
    """Pr(x=1 | parent assignment), which may be partial.

    Substituting the given values into x's equation yields either a
    constant (probability 1 or 0) or a residual formula whose probability
    is taken from the joint, conditioned on the given values.
    """
    from .formula import Bottom, Top

    if x not in set(m.endogenous):
        raise ValueError(f"'{x.name}' has no equation")
    parents = set(m.parents(x))
    stray = set(given) - parents
    if stray:
        names = ", ".join(sorted(v.name for v in stray))
        raise ValueError(
            f"assignment mentions non-parents of '{x.name}': {names}")
    residual = substitute(m.equations[x], given)
    if isinstance(residual, Top):
        return 1.0
    if isinstance(residual, Bottom):
        return 0.0
    dist = joint(m)
    denom = dist.marginal_mass(given)
    if denom <= 0.0:
        raise ZeroEvidenceError(
            "parent assignment has probability zero; the conditional "
            "distribution is undefined")
    mass = 0.0
    idx = {v: i for i, v in enumerate(dist.universe)}
    for key, p in dist.probs.items():
        if p == 0.0:
            continue
        if any(key[idx[v]] != b for v, b in given.items()):
            continue
        world = dict(zip(dist.universe, key))
        if evaluate(residual, world):
            mass += p
    return mass / denom


# ---------------------------------------------------------------------------
# Text format.
# ---------------------------------------------------------------------------

def parse_sem(text: str) -> Sem:
    from .psdd import _content_lines, _parse_float

    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty sem file")
    exo: list[Var] = []
    endo: list[Var] = []
    by_name: dict[str, Var] = {}
    equations: dict[Var, Formula] = {}
    eq_texts: list[tuple[int, str, str]] = []
    probs: dict[tuple[bool, ...], float] = {}
    in_dist = False
    for no, line in lines:
        if in_dist:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected '<bits> <probability>'", no)
            bits, ptok = parts
            if len(bits) != len(exo) or any(c not in "01" for c in bits):
                raise ParseError(
                    f"bit string '{bits}' must have one 0/1 per exogenous "
                    f"variable ({len(exo)} expected)", no)
            key = tuple(c == "1" for c in bits)
            if key in probs:
                raise ParseError(f"duplicate table row '{bits}'", no)
            probs[key] = _parse_float(ptok, no)
            continue
        parts = line.split()
        if parts[0] == "var":
            if len(parts) != 3 or parts[2] not in ("exo", "endo"):
                raise ParseError("expected 'var <name> exo|endo'", no)
            name = parts[1]
            if name in by_name:
                raise ParseError(f"duplicate variable '{name}'", no)
            v = Var(len(by_name), name)
            by_name[name] = v
            (exo if parts[2] == "exo" else endo).append(v)
        elif parts[0] == "eq":
            rest = line[len("eq"):].strip()
            name, sep, formula_text = rest.partition("=")
            if not sep:
                raise ParseError("expected 'eq <name> = <formula>'", no)
            eq_texts.append((no, name.strip(), formula_text.strip()))
        elif parts[0] == "dist":
            if len(parts) != 1:
                raise ParseError("expected bare 'dist'", no)
            in_dist = True
        else:
            raise ParseError(f"unknown sem line kind '{parts[0]}'", no)
    if not in_dist:
        raise ParseError("missing 'dist' block")
    universe = list(by_name.values())
    for no, name, formula_text in eq_texts:
        if name not in by_name:
            raise ParseError(f"equation for undeclared variable '{name}'", no)
        v = by_name[name]
        if v in equations:
            raise ParseError(f"duplicate equation for '{name}'", no)
        try:
            equations[v] = parse_formula(formula_text, universe)
        except ParseError as e:
            raise ParseError(f"in equation for '{name}': {e}", no) from None
    try:
        dist = TabularDistribution(tuple(exo), probs)
        return Sem(exo, endo, equations, dist)
    except ValueError as e:
        raise ParseError(str(e)) from None


def serialize_sem(m: Sem) -> str:
    lines = []
    for v in m.exogenous:
        lines.append(f"var {v.name} exo")
    for v in m.endogenous:
        lines.append(f"var {v.name} endo")
    for v in m.endogenous:
        lines.append(f"eq {v.name} = {format_formula(m.equations[v])}")
    lines.append("dist")
    for key in sorted(m.exogenous_dist.probs):
        p = m.exogenous_dist.probs[key]
        bits = "".join("1" if b else "0" for b in key)
        lines.append(f"{bits} {p:.17g}")
    return "\n".join(lines) + "\n"
