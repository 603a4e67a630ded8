"""Compile a support formula plus a joint distribution into a structural
equation model.

The construction mirrors the circuit's syntax tree.  Every original
variable X_k becomes an endogenous node with the identity equation
X_k = H_k, where the H_k are fresh exogenous components whose joint table
is the given distribution.  Every connective of the formula becomes an
augmented endogenous node: a conjunction must be binary and yields a node
with two children, a disjunction yields one child per disjunct (any
arity).  Literal operands do not create nodes; a negated literal simply
appears negated inside the consumer's equation.  Identical sub-formulas
are merged, so a shared conjunct like the formula fragment feeding several
disjuncts compiles to a single reused node.

Augmented nodes are numbered X_1, X_2, ... by a post-order, left-to-right
traversal with merged duplicates, which makes the naming reproducible.
The root node always exists, even when the whole formula is one literal.

``compile_psdd`` runs the whole pipeline on a circuit: take the support
formula of the root, simplify, push negations to literals, binarize
conjunctions, then compile against the circuit's own joint.
``check_consistency`` exhaustively compares the compiled model's marginal
over the originals with the circuit distribution and reports the largest
absolute deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import EnumerationLimitError
from .formula import (
    And,
    Assignment,
    Bottom,
    Formula,
    Lit,
    Not,
    Or,
    Top,
    Var,
    assignments,
    binarize,
    conj,
    disj,
    lit,
    nnf,
    simplify,
    variables,
)
from .psdd import Psdd
from .sem import Sem, TabularDistribution, joint


@dataclass(frozen=True)
class CompilationResult:
    """The compiled model plus the bookkeeping around it.

    ``hidden[k]`` is the exogenous source of ``originals[k]``; ``naming``
    maps every augmented variable to the sub-formula (over the originals)
    that it denotes.
    """

    sem: Sem
    originals: tuple[Var, ...]
    hidden: tuple[Var, ...]
    naming: dict[Var, Formula]

    @property
    def augmented(self) -> tuple[Var, ...]:
        return tuple(v for v in self.sem.endogenous
                     if v not in set(self.originals))

    @property
    def root(self) -> Var:
        return self.sem.endogenous[-1]


def compile_formula(f: Formula, originals: Iterable[Var],
                    h_dist: TabularDistribution) -> CompilationResult:
    """Build the structural model of a formula over the originals.

    Preconditions: f is in negation normal form with binary conjunctions
    and no internal constants (run simplify/nnf/binarize first), its
    variables are among the originals, and h_dist has one component per
    original (matched by position).
    """
    originals = tuple(originals)
    if len(set(originals)) != len(originals):
        raise ValueError("originals contain duplicates")
    stray = variables(f) - set(originals)
    if stray:
        names = ", ".join(sorted(v.name for v in stray))
        raise ValueError(f"formula mentions non-original variable(s): {names}")
    if len(h_dist.universe) != len(originals):
        raise ValueError(
            f"distribution has {len(h_dist.universe)} components for "
            f"{len(originals)} originals")

    def check_shape(g: Formula, root: bool = False):
        if isinstance(g, Not):
            raise ValueError(
                "formula is not in negation normal form; apply nnf() first")
        if isinstance(g, (Top, Bottom)) and not root:
            raise ValueError(
                "formula contains internal constants; apply simplify() first")
        if isinstance(g, And):
            if len(g.children) != 2:
                raise ValueError(
                    "conjunction has more than two operands; apply "
                    "binarize() first")
            for c in g.children:
                check_shape(c)
        if isinstance(g, Or):
            for c in g.children:
                check_shape(c)

    check_shape(f, root=True)

    taken = {v.name for v in originals}
    next_id = max((v.id for v in originals), default=-1) + 1

    def fresh(name: str) -> Var:
        nonlocal next_id
        v = Var(next_id, name)
        next_id += 1
        return v

    hidden: list[Var] = []
    equations: dict[Var, Formula] = {}
    for k, orig in enumerate(originals, start=1):
        name = f"H_{k}"
        while name in taken:
            name = "_" + name
        taken.add(name)
        h = fresh(name)
        hidden.append(h)
        equations[orig] = lit(h)

    augmented: list[Var] = []
    naming: dict[Var, Formula] = {}
    node_of: dict[Formula, Var] = {}

    def node_for(g: Formula) -> Var:
        if g in node_of:
            return node_of[g]
        if isinstance(g, (Top, Bottom, Lit)):
            # Only reachable for a root-level literal or constant; inner
            # literals are folded into their consumer's equation.
            equation: Formula = g
        elif isinstance(g, And):
            equation = conj(*(operand_ref(c) for c in g.children))
        elif isinstance(g, Or):
            equation = disj(*(operand_ref(c) for c in g.children))
        else:
            raise TypeError(f"not a formula: {g!r}")
        node = fresh(f"X_{len(augmented) + 1}")
        augmented.append(node)
        naming[node] = g
        equations[node] = equation
        node_of[g] = node
        return node

    def operand_ref(c: Formula) -> Formula:
        if isinstance(c, Lit):
            return c
        return lit(node_for(c))

    node_for(f)

    endogenous = list(originals) + augmented
    dist = TabularDistribution(tuple(hidden), dict(h_dist.probs))
    sem = Sem(tuple(hidden), tuple(endogenous), equations, dist)
    return CompilationResult(sem, originals, tuple(hidden), naming)


def compile_psdd(m: Psdd) -> CompilationResult:
    """Support formula and joint of a circuit, compiled to a model."""
    f = binarize(nnf(simplify(m.base())))
    originals = m.universe
    if len(originals) > 20:
        raise EnumerationLimitError(
            f"cannot tabulate a joint over {len(originals)} variables")
    probs: dict[tuple[bool, ...], float] = {}
    for a in assignments(originals):
        p = m.probability(a)
        if p > 0.0:
            probs[tuple(a[v] for v in originals)] = p
    h_dist = TabularDistribution(originals, probs)
    return compile_formula(f, originals, h_dist)


def check_consistency(result: CompilationResult, m: Psdd) -> float:
    """Largest deviation between the model and the circuit.

    Enumerates every total assignment of the originals and compares the
    compiled model's marginal with the circuit's probability.
    """
    if tuple(result.originals) != tuple(m.universe):
        raise ValueError(
            "compilation result and circuit have different universes")
    dist = joint(result.sem).marginal(result.originals)
    worst = 0.0
    for a in assignments(result.originals):
        key = tuple(a[v] for v in result.originals)
        worst = max(worst, abs(dist.probs.get(key, 0.0) - m.probability(a)))
    return worst


def naming_sidecar(result: CompilationResult) -> str:
    """One line per augmented node, in numbering order: its equation."""
    from .formula import format_formula

    lines = []
    for v in result.sem.endogenous:
        if v in result.naming:
            lines.append(f"{v.name} = {format_formula(result.sem.equations[v])}")
    return "\n".join(lines) + "\n"
