"""Probability distributions as vtree-structured decision circuits.

A vtree is a full binary tree whose leaves are the variables.  The circuit
is built from four node kinds, each normalized for a vtree node:

* ``TerminalTrue`` at a leaf for variable X: Bernoulli with Pr(X=1) = theta,
  where 0 < theta < 1.
* ``TerminalLiteral`` at a leaf: X=1 (positive) or X=0 (negative) with
  certainty.
* ``TerminalFalse``: the all-zero "distribution"; it may sit at any vtree
  node and only ever appears as the sub of a zero-weight decision element.
* ``Decision`` at an internal vtree node: elements (prime_i, sub_i, theta_i)
  with primes normalized for the left child and subs for the right child.
  The primes' supports must partition the full space of left-side
  assignments, theta_i >= 0 must sum to one, and theta_i = 0 exactly when
  sub_i has empty support.

The probability of a total assignment (x, y) at a decision node is
theta_i * P_prime_i(x) * P_sub_i(y) for the unique prime whose support
contains x.  Marginals fix a subset of the variables and sum terminals over
the free ones; this needs just one bottom-up pass over the circuit.

``base`` maps a node to the propositional formula describing its support:
terminals map to true/false/literal, and a decision node maps to the
disjunction of prime-base & sub-base over its elements.

Validation is oracle-based on purpose: the partition and support checks
enumerate assignments with :mod:`causalcirc.formula`'s ``models``, which
keeps them desk-checkable at the scale this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple, Union

from .errors import ParseError, ZeroEvidenceError
from .formula import (
    FALSE,
    TRUE,
    Assignment,
    Formula,
    Lit,
    Var,
    conj,
    disj,
    models,
    simplify,
)


@dataclass(frozen=True)
class VtreeLeaf:
    id: int
    var: Var


@dataclass(frozen=True)
class VtreeInternal:
    id: int
    left: "VtreeNode"
    right: "VtreeNode"


VtreeNode = Union[VtreeLeaf, VtreeInternal]


class Vtree:
    """A variable tree; owns the universe of variables.

    Variable ids follow the order in which leaves are declared, so a vtree
    file fixes both the tree shape and the variable ordering.
    """

    def __init__(self, root: VtreeNode):
        self.root = root
        self.by_id: dict[int, VtreeNode] = {}
        for node in _vtree_postorder(root):
            if node.id in self.by_id:
                raise ValueError(f"duplicate vtree node id {node.id}")
            self.by_id[node.id] = node
        self.universe: tuple[Var, ...] = tuple(
            n.var for n in _vtree_postorder(root) if isinstance(n, VtreeLeaf))
        names = [v.name for v in self.universe]
        if len(set(names)) != len(names):
            raise ValueError("vtree declares a variable name twice")

    def vars_below(self, node: VtreeNode) -> frozenset[Var]:
        if isinstance(node, VtreeLeaf):
            return frozenset((node.var,))
        return self.vars_below(node.left) | self.vars_below(node.right)

    def __eq__(self, other):
        return isinstance(other, Vtree) and self.root == other.root

    def __hash__(self):
        return hash(self.root)


def _vtree_postorder(node: VtreeNode) -> Iterator[VtreeNode]:
    if isinstance(node, VtreeInternal):
        yield from _vtree_postorder(node.left)
        yield from _vtree_postorder(node.right)
    yield node


@dataclass(frozen=True)
class TerminalTrue:
    vtree_id: int
    theta: float


@dataclass(frozen=True)
class TerminalFalse:
    vtree_id: int


@dataclass(frozen=True)
class TerminalLiteral:
    vtree_id: int
    positive: bool


class Element(NamedTuple):
    prime: "PsddNode"
    sub: "PsddNode"
    theta: float


@dataclass(frozen=True)
class Decision:
    vtree_id: int
    elements: tuple[Element, ...]


PsddNode = Union[TerminalTrue, TerminalFalse, TerminalLiteral, Decision]


def _psdd_nodes(root: PsddNode) -> list[PsddNode]:
    """Unique nodes reachable from the root, children before parents."""
    seen: set[int] = set()
    order: list[PsddNode] = []

    def walk(n: PsddNode):
        if id(n) in seen:
            return
        seen.add(id(n))
        if isinstance(n, Decision):
            for e in n.elements:
                walk(e.prime)
                walk(e.sub)
        order.append(n)

    walk(root)
    return order


class Psdd:
    """A circuit plus the vtree it is normalized for."""

    def __init__(self, vtree: Vtree, root: PsddNode):
        self.vtree = vtree
        self.root = root

    @property
    def universe(self) -> tuple[Var, ...]:
        return self.vtree.universe

    def __eq__(self, other):
        return (isinstance(other, Psdd) and self.vtree == other.vtree
                and self.root == other.root)

    def _leaf_var(self, node: PsddNode) -> Var:
        v = self.vtree.by_id[node.vtree_id]
        if not isinstance(v, VtreeLeaf):
            raise ValueError(
                f"terminal node sits at internal vtree node {node.vtree_id}")
        return v.var

    def _values(self, a: Mapping[Var, bool]) -> dict[int, float]:
        """One bottom-up pass; unassigned variables are summed out."""
        values: dict[int, float] = {}
        for n in _psdd_nodes(self.root):
            if isinstance(n, TerminalFalse):
                values[id(n)] = 0.0
            elif isinstance(n, TerminalTrue):
                x = self._leaf_var(n)
                if x in a:
                    values[id(n)] = n.theta if a[x] else 1.0 - n.theta
                else:
                    values[id(n)] = 1.0
            elif isinstance(n, TerminalLiteral):
                x = self._leaf_var(n)
                if x in a:
                    values[id(n)] = 1.0 if a[x] == n.positive else 0.0
                else:
                    values[id(n)] = 1.0
            else:
                values[id(n)] = sum(
                    e.theta * values[id(e.prime)] * values[id(e.sub)]
                    for e in n.elements)
        return values

    def probability(self, a: Assignment) -> float:
        """Probability of a total assignment over the universe."""
        missing = set(self.universe) - set(a)
        if missing:
            names = ", ".join(sorted(v.name for v in missing))
            raise ValueError(f"assignment is not total, missing: {names}")
        extra = set(a) - set(self.universe)
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"assignment covers unknown variable(s): {names}")
        return self._values(a)[id(self.root)]

    def marginal(self, partial: Assignment) -> float:
        """Probability that the assigned variables take the given values.

        The empty assignment yields 1 on a valid circuit.
        """
        extra = set(partial) - set(self.universe)
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"assignment covers unknown variable(s): {names}")
        return self._values(partial)[id(self.root)]

    def conditional(self, query: Assignment, evidence: Assignment) -> float:
        """Pr(query | evidence); query and evidence must not overlap."""
        overlap = set(query) & set(evidence)
        if overlap:
            names = ", ".join(sorted(v.name for v in overlap))
            raise ValueError(f"query and evidence overlap on: {names}")
        denom = self.marginal(evidence)
        if denom <= 0.0:
            raise ZeroEvidenceError(
                "evidence has probability zero; conditional is undefined")
        joint = dict(evidence)
        joint.update(query)
        return self.marginal(joint) / denom

    def base(self, node: PsddNode | None = None) -> Formula:
        """The support formula of a node (default: the root)."""
        if node is None:
            node = self.root
        cache: dict[int, Formula] = {}
        for n in _psdd_nodes(node):
            if isinstance(n, TerminalTrue):
                cache[id(n)] = TRUE
            elif isinstance(n, TerminalFalse):
                cache[id(n)] = FALSE
            elif isinstance(n, TerminalLiteral):
                cache[id(n)] = Lit(self._leaf_var(n), n.positive)
            else:
                cache[id(n)] = simplify(disj(*(
                    conj(cache[id(e.prime)], cache[id(e.sub)])
                    for e in n.elements)))
        return cache[id(node)]


def validate(psdd: Psdd, tol: float = 1e-9) -> list[str]:
    """Check every structural invariant; returns a list of violations.

    An empty list means the circuit is a valid PSDD.  Violations are data,
    not exceptions: the validator is meant to report on suspect files.
    """
    from .formula import variables

    out: list[str] = []
    vt = psdd.vtree
    if psdd.root.vtree_id != vt.root.id:
        out.append(
            f"root is normalized for vtree node {psdd.root.vtree_id}, "
            f"expected the vtree root {vt.root.id}")

    def support(n: PsddNode) -> list[Assignment] | None:
        """Models of a node's base, or None when the base escapes the
        node's vtree scope (reported separately; dependents skip)."""
        vnode = vt.by_id.get(n.vtree_id)
        if vnode is None:
            return None
        below = vt.vars_below(vnode)
        f = psdd.base(n)
        if variables(f) - below:
            return None
        return models(f, sorted(below))

    for n in _psdd_nodes(psdd.root):
        vnode = vt.by_id.get(n.vtree_id)
        if vnode is None:
            out.append(f"node references unknown vtree node {n.vtree_id}")
            continue
        where = f"vtree node {n.vtree_id}"
        if isinstance(n, TerminalTrue):
            if not isinstance(vnode, VtreeLeaf):
                out.append(f"terminal at {where} must sit at a leaf")
            if not 0.0 < n.theta < 1.0:
                out.append(
                    f"terminal at {where} has theta={n.theta!r}, "
                    "needs 0 < theta < 1")
        elif isinstance(n, TerminalLiteral):
            if not isinstance(vnode, VtreeLeaf):
                out.append(f"literal at {where} must sit at a leaf")
        elif isinstance(n, Decision):
            if not isinstance(vnode, VtreeInternal):
                out.append(f"decision at {where} must sit at an internal node")
                continue
            if not n.elements:
                out.append(f"decision at {where} has no elements")
                continue
            total = 0.0
            for i, e in enumerate(n.elements):
                total += e.theta
                if e.theta < 0.0:
                    out.append(
                        f"decision at {where}: element {i} has negative "
                        f"theta {e.theta!r}")
                if e.prime.vtree_id != vnode.left.id:
                    out.append(
                        f"decision at {where}: prime of element {i} is "
                        f"normalized for vtree node {e.prime.vtree_id}, "
                        f"expected {vnode.left.id}")
                if e.sub.vtree_id != vnode.right.id:
                    out.append(
                        f"decision at {where}: sub of element {i} is "
                        f"normalized for vtree node {e.sub.vtree_id}, "
                        f"expected {vnode.right.id}")
                sub_support = support(e.sub)
                if sub_support is None:
                    out.append(
                        f"decision at {where}: sub of element {i} mentions "
                        "variables outside its vtree node")
                    continue
                if (e.theta == 0.0) != (len(sub_support) == 0):
                    out.append(
                        f"decision at {where}: element {i} must have "
                        "theta = 0 exactly when its sub has empty support")
            if abs(total - 1.0) > tol:
                out.append(
                    f"decision at {where}: element thetas sum to {total!r}")
            # Primes must partition the space of left-side assignments.
            prime_supports = []
            scoped = True
            for i, e in enumerate(n.elements):
                s = support(e.prime)
                if s is None:
                    out.append(
                        f"decision at {where}: prime of element {i} mentions "
                        "variables outside its vtree node")
                    scoped = False
                    continue
                prime_supports.append(
                    {tuple(sorted((v.name, b) for v, b in m.items()))
                     for m in s})
            if not scoped:
                continue
            for i, si in enumerate(prime_supports):
                if not si:
                    out.append(
                        f"decision at {where}: prime of element {i} has "
                        "empty support")
                for j in range(i + 1, len(prime_supports)):
                    if si & prime_supports[j]:
                        out.append(
                            f"decision at {where}: primes of elements "
                            f"{i} and {j} overlap")
            covered = set().union(*prime_supports) if prime_supports else set()
            n_left = len(vt.vars_below(vnode.left))
            if len(covered) != 2 ** n_left:
                out.append(
                    f"decision at {where}: primes cover {len(covered)} of "
                    f"{2 ** n_left} left-side assignments")
    return out


# ---------------------------------------------------------------------------
# Text formats.
#
# Vtree files:   header "vtree N", then N lines of
#                "L <id> <varname>" or "I <id> <left-id> <right-id>",
#                children before parents, root last.
# PSDD files:    header "psdd N", then N lines of
#                "T <id> <vtree-id> <theta>"            Bernoulli terminal
#                "F <id> <vtree-id>"                    zero distribution
#                "L <id> <vtree-id> <+|-><varname>"     literal terminal
#                "D <id> <vtree-id> <k> (<prime-id> <sub-id> <theta>)*k"
#                nodes defined before use, root last.
# Both formats allow blank lines and "#" comments.
# ---------------------------------------------------------------------------

def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((no, line))
    return out


def parse_vtree(text: str) -> Vtree:
    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty vtree file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "vtree":
        raise ParseError("expected header 'vtree N'", no)
    try:
        count = int(parts[1])
    except ValueError:
        raise ParseError(f"bad node count '{parts[1]}'", no) from None
    body = lines[1:]
    if len(body) != count:
        raise ParseError(
            f"header announces {count} nodes but file has {len(body)}",
            lines[0][0])
    nodes: dict[int, VtreeNode] = {}
    referenced: set[int] = set()
    next_var = 0
    last: VtreeNode | None = None
    for no, line in body:
        parts = line.split()
        kind = parts[0]
        if kind == "L":
            if len(parts) != 3:
                raise ParseError("expected 'L <id> <varname>'", no)
            nid = _parse_int(parts[1], no)
            name = parts[2]
            node: VtreeNode = VtreeLeaf(nid, Var(next_var, name))
            next_var += 1
        elif kind == "I":
            if len(parts) != 4:
                raise ParseError("expected 'I <id> <left-id> <right-id>'", no)
            nid = _parse_int(parts[1], no)
            left_id = _parse_int(parts[2], no)
            right_id = _parse_int(parts[3], no)
            for child in (left_id, right_id):
                if child not in nodes:
                    raise ParseError(
                        f"child {child} is not defined yet", no)
                if child in referenced:
                    raise ParseError(
                        f"node {child} is used as a child twice", no)
                referenced.add(child)
            node = VtreeInternal(nid, nodes[left_id], nodes[right_id])
        else:
            raise ParseError(f"unknown vtree line kind '{kind}'", no)
        if nid in nodes:
            raise ParseError(f"duplicate vtree node id {nid}", no)
        nodes[nid] = node
        last = node
    assert last is not None
    unreferenced = set(nodes) - referenced
    if unreferenced != {last.id}:
        raise ParseError(
            "the last line must define the root and every other node must "
            "be used exactly once")
    return Vtree(last)


def serialize_vtree(vt: Vtree) -> str:
    lines = []
    for node in _vtree_postorder(vt.root):
        if isinstance(node, VtreeLeaf):
            lines.append(f"L {node.id} {node.var.name}")
        else:
            lines.append(f"I {node.id} {node.left.id} {node.right.id}")
    return "\n".join([f"vtree {len(lines)}", *lines]) + "\n"


def _parse_int(token: str, no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got '{token}'", no) from None


def _parse_float(token: str, no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got '{token}'", no) from None


def parse_psdd(text: str, vtree: Vtree) -> Psdd:
    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty psdd file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "psdd":
        raise ParseError("expected header 'psdd N'", no)
    count = _parse_int(parts[1], no)
    body = lines[1:]
    if len(body) != count:
        raise ParseError(
            f"header announces {count} nodes but file has {len(body)}",
            lines[0][0])
    nodes: dict[int, PsddNode] = {}
    root: PsddNode | None = None
    for no, line in body:
        parts = line.split()
        kind = parts[0]
        if kind == "T":
            if len(parts) != 4:
                raise ParseError("expected 'T <id> <vtree-id> <theta>'", no)
            nid = _parse_int(parts[1], no)
            vid = _parse_int(parts[2], no)
            _require_leaf(vtree, vid, no)
            node: PsddNode = TerminalTrue(vid, _parse_float(parts[3], no))
        elif kind == "F":
            if len(parts) != 3:
                raise ParseError("expected 'F <id> <vtree-id>'", no)
            nid = _parse_int(parts[1], no)
            vid = _parse_int(parts[2], no)
            _require_vtree(vtree, vid, no)
            node = TerminalFalse(vid)
        elif kind == "L":
            if len(parts) != 4:
                raise ParseError(
                    "expected 'L <id> <vtree-id> <+|-><varname>'", no)
            nid = _parse_int(parts[1], no)
            vid = _parse_int(parts[2], no)
            leaf = _require_leaf(vtree, vid, no)
            token = parts[3]
            if not token or token[0] not in "+-":
                raise ParseError(
                    f"literal must start with + or -, got '{token}'", no)
            if token[1:] != leaf.var.name:
                raise ParseError(
                    f"literal names '{token[1:]}' but vtree node {vid} "
                    f"holds '{leaf.var.name}'", no)
            node = TerminalLiteral(vid, token[0] == "+")
        elif kind == "D":
            if len(parts) < 4:
                raise ParseError(
                    "expected 'D <id> <vtree-id> <k> <triples>'", no)
            nid = _parse_int(parts[1], no)
            vid = _parse_int(parts[2], no)
            _require_vtree(vtree, vid, no)
            k = _parse_int(parts[3], no)
            rest = parts[4:]
            if len(rest) != 3 * k:
                raise ParseError(
                    f"decision announces {k} elements but line has "
                    f"{len(rest)} fields (need {3 * k})", no)
            elements = []
            for i in range(k):
                pid = _parse_int(rest[3 * i], no)
                sid = _parse_int(rest[3 * i + 1], no)
                theta = _parse_float(rest[3 * i + 2], no)
                for ref in (pid, sid):
                    if ref not in nodes:
                        raise ParseError(
                            f"element references undefined node {ref}", no)
                elements.append(Element(nodes[pid], nodes[sid], theta))
            node = Decision(vid, tuple(elements))
        else:
            raise ParseError(f"unknown psdd line kind '{kind}'", no)
        if nid in nodes:
            raise ParseError(f"duplicate psdd node id {nid}", no)
        nodes[nid] = node
        root = node
    assert root is not None
    return Psdd(vtree, root)


def _require_vtree(vtree: Vtree, vid: int, no: int) -> VtreeNode:
    node = vtree.by_id.get(vid)
    if node is None:
        raise ParseError(f"unknown vtree node id {vid}", no)
    return node


def _require_leaf(vtree: Vtree, vid: int, no: int) -> VtreeLeaf:
    node = _require_vtree(vtree, vid, no)
    if not isinstance(node, VtreeLeaf):
        raise ParseError(f"vtree node {vid} is not a leaf", no)
    return node


def serialize_psdd(psdd: Psdd) -> str:
    """Serialize children-before-parents; parameters keep 17 significant
    digits so that parse(serialize(m)) reproduces every float exactly."""
    order = _psdd_nodes(psdd.root)
    ids = {id(n): i for i, n in enumerate(order)}
    lines = []
    for n in order:
        nid = ids[id(n)]
        if isinstance(n, TerminalTrue):
            lines.append(f"T {nid} {n.vtree_id} {n.theta:.17g}")
        elif isinstance(n, TerminalFalse):
            lines.append(f"F {nid} {n.vtree_id}")
        elif isinstance(n, TerminalLiteral):
            leaf = psdd.vtree.by_id[n.vtree_id]
            assert isinstance(leaf, VtreeLeaf)
            sign = "+" if n.positive else "-"
            lines.append(f"L {nid} {n.vtree_id} {sign}{leaf.var.name}")
        else:
            triples = " ".join(
                f"{ids[id(e.prime)]} {ids[id(e.sub)]} {e.theta:.17g}"
                for e in n.elements)
            lines.append(f"D {nid} {n.vtree_id} {len(n.elements)} {triples}")
    return "\n".join([f"psdd {len(lines)}", *lines]) + "\n"
