"""Sum-product networks with indicator leaves, and their reading as a
bipartite Bayesian-network topology.

evaluate() computes the network polynomial: indicators of unassigned
variables are set to 1, so partial assignments yield marginals directly.
Sum weights are required to be normalized at parse time.

to_bn_topology() maps a complete and decomposable SPN to the two-layer
DAG that has one latent node per sum node, one observable node per
variable, and an edge latent -> observable exactly when the variable lies
in the sum node's scope.  Interventions on observables in that topology
are always trivial; verify_spn_triviality() checks the underlying
do-calculus condition (rule 3 with empty context) instead of assuming it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .errors import EnumerationLimitError, ParseError
from .formula import Assignment, Var, assignments
from .graph import CausalGraph, rule3_applies

MAX_SELECTIVITY_VARS = 12


@dataclass(frozen=True)
class Indicator:
    var: Var
    positive: bool


@dataclass(frozen=True)
class Product:
    children: tuple["SpnNode", ...]


@dataclass(frozen=True)
class Sum:
    children: tuple["SpnNode", ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.children) != len(self.weights):
            raise ValueError("sum node needs one weight per child")
        if not self.children:
            raise ValueError("sum node has no children")


SpnNode = Union[Indicator, Product, Sum]


def _spn_nodes(root: SpnNode) -> list[SpnNode]:
    seen: set[int] = set()
    order: list[SpnNode] = []

    def walk(n: SpnNode):
        if id(n) in seen:
            return
        seen.add(id(n))
        if isinstance(n, (Product, Sum)):
            for c in n.children:
                walk(c)
        order.append(n)

    walk(root)
    return order


class Spn:
    def __init__(self, universe: Iterable[Var], root: SpnNode):
        self.universe = tuple(universe)
        self.root = root
        known = set(self.universe)
        for n in _spn_nodes(root):
            if isinstance(n, Indicator) and n.var not in known:
                raise ValueError(
                    f"indicator variable '{n.var.name}' not in universe")

    def _values(self, a: Mapping[Var, bool]) -> dict[int, float]:
        values: dict[int, float] = {}
        for n in _spn_nodes(self.root):
            if isinstance(n, Indicator):
                if n.var in a:
                    values[id(n)] = 1.0 if a[n.var] == n.positive else 0.0
                else:
                    values[id(n)] = 1.0
            elif isinstance(n, Product):
                v = 1.0
                for c in n.children:
                    v *= values[id(c)]
                values[id(n)] = v
            else:
                values[id(n)] = sum(
                    w * values[id(c)] for c, w in zip(n.children, n.weights))
        return values

    def evaluate(self, a: Assignment) -> float:
        """Network-polynomial value; unassigned indicators count as 1."""
        extra = set(a) - set(self.universe)
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"assignment covers unknown variable(s): {names}")
        return self._values(a)[id(self.root)]

    def scope(self, node: SpnNode | None = None) -> frozenset[Var]:
        if node is None:
            node = self.root
        scopes: dict[int, frozenset[Var]] = {}
        for n in _spn_nodes(node):
            if isinstance(n, Indicator):
                scopes[id(n)] = frozenset((n.var,))
            else:
                s: frozenset[Var] = frozenset()
                for c in n.children:
                    s |= scopes[id(c)]
                scopes[id(n)] = s
        return scopes[id(node)]

    def sum_nodes(self) -> list[Sum]:
        """Sum nodes in deterministic (children-first) order."""
        return [n for n in _spn_nodes(self.root) if isinstance(n, Sum)]


@dataclass(frozen=True)
class StructureReport:
    complete: bool
    decomposable: bool
    selective: bool


def check_structure(s: Spn) -> StructureReport:
    """Completeness, decomposability and selectivity.

    Selectivity is decided by exhaustive enumeration of total assignments
    (at most one child of each sum node may evaluate nonzero on every one),
    so the universe is capped at MAX_SELECTIVITY_VARS variables.
    """
    if len(s.universe) > MAX_SELECTIVITY_VARS:
        raise EnumerationLimitError(
            f"selectivity check enumerate {len(s.universe)} variables "
            f"(limit {MAX_SELECTIVITY_VARS})")
    scopes: dict[int, frozenset[Var]] = {}
    complete = True
    decomposable = True
    for n in _spn_nodes(s.root):
        if isinstance(n, Indicator):
            scopes[id(n)] = frozenset((n.var,))
            continue
        child_scopes = [scopes[id(c)] for c in n.children]
        merged: frozenset[Var] = frozenset()
        for cs in child_scopes:
            merged |= cs
        scopes[id(n)] = merged
        if isinstance(n, Sum):
            if any(cs != child_scopes[0] for cs in child_scopes[1:]):
                complete = False
        else:
            total = sum(len(cs) for cs in child_scopes)
            if total != len(merged):
                decomposable = False
    selective = True
    sums = s.sum_nodes()
    for a in assignments(s.universe):
        values = s._values(a)
        for n in sums:
            nonzero = sum(1 for c in n.children if values[id(c)] != 0.0)
            if nonzero > 1:
                selective = False
                break
        if not selective:
            break
    return StructureReport(complete, decomposable, selective)


@dataclass(frozen=True)
class BnTopology:
    """One latent per sum node, one observable per variable, and an edge
    latent -> observable when the variable is in the sum node's scope."""

    latents: tuple[str, ...]
    observables: tuple[Var, ...]
    edges: tuple[tuple[str, str], ...]

    def to_causal_graph(self) -> CausalGraph:
        return CausalGraph(self.latents,
                           tuple(v.name for v in self.observables),
                           self.edges)


def to_bn_topology(s: Spn) -> BnTopology:
    """The bipartite topology of a complete and decomposable SPN."""
    report_scopes: dict[int, frozenset[Var]] = {}
    for n in _spn_nodes(s.root):
        if isinstance(n, Indicator):
            report_scopes[id(n)] = frozenset((n.var,))
        else:
            merged: frozenset[Var] = frozenset()
            for c in n.children:
                merged |= report_scopes[id(c)]
            report_scopes[id(n)] = merged
        if isinstance(n, Sum):
            child_scopes = [report_scopes[id(c)] for c in n.children]
            if any(cs != child_scopes[0] for cs in child_scopes[1:]):
                raise ValueError(
                    "SPN is not complete; the bipartite reading is defined "
                    "only for complete and decomposable networks")
        if isinstance(n, Product):
            child_scopes = [report_scopes[id(c)] for c in n.children]
            if sum(len(cs) for cs in child_scopes) != len(report_scopes[id(n)]):
                raise ValueError(
                    "SPN is not decomposable; the bipartite reading is "
                    "defined only for complete and decomposable networks")
    latents = []
    edges = []
    for i, n in enumerate(s.sum_nodes(), start=1):
        name = f"h{i}"
        latents.append(name)
        for v in sorted(report_scopes[id(n)]):
            edges.append((name, v.name))
    return BnTopology(tuple(latents), s.universe, tuple(edges))


def verify_spn_triviality(topology: BnTopology | CausalGraph,
                          x: Iterable[str]) -> bool:
    """Check that intervening on the observable set x is trivial, i.e. that
    rule 3 licenses dropping do(x) from Pr(everything-else | do(x)).

    Raises if x is empty or contains a latent.  The result is computed from
    the graph, not assumed from the bipartite shape, so hand-built
    non-bipartite graphs can and do fail it.
    """
    g = topology.to_causal_graph() if isinstance(topology, BnTopology) else topology
    xs = set(x)
    if not xs:
        raise ValueError("intervention target set is empty")
    latents = set(g.exogenous)
    offenders = xs & latents
    if offenders:
        raise ValueError(
            f"intervention targets latent node(s): {sorted(offenders)}")
    unknown = xs - set(g.nodes)
    if unknown:
        raise ValueError(f"unknown node(s): {sorted(unknown)}")
    rest = set(g.nodes) - xs
    return rule3_applies(g, (), rest, xs, ())


# Text format: header "spn N", then N lines of
#   "I <id> <+|-><varname>"
#   "P <id> <child-id>+"
#   "S <id> <k> (<child-id> <weight>)*k"
# children before parents, root last, "#" comments allowed.

def parse_spn(text: str, weight_tol: float = 1e-9) -> Spn:
    from .psdd import _content_lines, _parse_float, _parse_int  # shared readers

    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty spn file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "spn":
        raise ParseError("expected header 'spn N'", no)
    count = _parse_int(parts[1], no)
    body = lines[1:]
    if len(body) != count:
        raise ParseError(
            f"header announces {count} nodes but file has {len(body)}",
            lines[0][0])
    nodes: dict[int, SpnNode] = {}
    vars_by_name: dict[str, Var] = {}
    root: SpnNode | None = None
    for no, line in body:
        parts = line.split()
        kind = parts[0]
        if kind == "I":
            if len(parts) != 3:
                raise ParseError("expected 'I <id> <+|-><varname>'", no)
            nid = _parse_int(parts[1], no)
            token = parts[2]
            if not token or token[0] not in "+-":
                raise ParseError(
                    f"indicator must start with + or -, got '{token}'", no)
            name = token[1:]
            if name not in vars_by_name:
                vars_by_name[name] = Var(len(vars_by_name), name)
            node: SpnNode = Indicator(vars_by_name[name], token[0] == "+")
        elif kind == "P":
            if len(parts) < 3:
                raise ParseError("expected 'P <id> <child-id>+'", no)
            nid = _parse_int(parts[1], no)
            children = []
            for token in parts[2:]:
                cid = _parse_int(token, no)
                if cid not in nodes:
                    raise ParseError(f"undefined child node {cid}", no)
                children.append(nodes[cid])
            node = Product(tuple(children))
        elif kind == "S":
            if len(parts) < 4:
                raise ParseError("expected 'S <id> <k> <pairs>'", no)
            nid = _parse_int(parts[1], no)
            k = _parse_int(parts[2], no)
            rest = parts[3:]
            if len(rest) != 2 * k:
                raise ParseError(
                    f"sum announces {k} children but line has {len(rest)} "
                    f"fields (need {2 * k})", no)
            children = []
            weights = []
            for i in range(k):
                cid = _parse_int(rest[2 * i], no)
                if cid not in nodes:
                    raise ParseError(f"undefined child node {cid}", no)
                children.append(nodes[cid])
                weights.append(_parse_float(rest[2 * i + 1], no))
            if any(w < 0 for w in weights):
                raise ParseError("sum weights must be nonnegative", no)
            if abs(sum(weights) - 1.0) > weight_tol:
                raise ParseError(
                    f"sum weights must be normalized, got sum {sum(weights)!r}",
                    no)
            node = Sum(tuple(children), tuple(weights))
        else:
            raise ParseError(f"unknown spn line kind '{kind}'", no)
        if nid in nodes:
            raise ParseError(f"duplicate spn node id {nid}", no)
        nodes[nid] = node
        root = node
    assert root is not None
    universe = tuple(vars_by_name.values())
    return Spn(universe, root)


def serialize_spn(s: Spn) -> str:
    order = _spn_nodes(s.root)
    ids = {id(n): i for i, n in enumerate(order)}
    lines = []
    for n in order:
        nid = ids[id(n)]
        if isinstance(n, Indicator):
            sign = "+" if n.positive else "-"
            lines.append(f"I {nid} {sign}{n.var.name}")
        elif isinstance(n, Product):
            kids = " ".join(str(ids[id(c)]) for c in n.children)
            lines.append(f"P {nid} {kids}")
        else:
            pairs = " ".join(f"{ids[id(c)]} {w:.17g}"
                             for c, w in zip(n.children, n.weights))
            lines.append(f"S {nid} {len(n.children)} {pairs}")
    return "\n".join([f"spn {len(lines)}", *lines]) + "\n"
