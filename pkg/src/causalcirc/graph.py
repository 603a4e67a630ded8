"""Directed acyclic graphs over exogenous and endogenous nodes.

Implements the graph side of the do-calculus: d-separation by the standard
reachability construction, edge-deletion mutilation, the three rewrite
rules, the back-door criterion and the sink-intervention test.  Nodes are
plain strings; exogenous nodes are rendered dashed in DOT output.

d-separation follows the usual path semantics: a path is blocked by Z at a
chain or fork node that is in Z, and at a collider unless the collider or
one of its descendants is in Z.  X and Y are d-separated given Z when every
path between them is blocked.  The reachability implementation below visits
(node, direction) pairs and is linear in the size of the graph; the test
suite validates it against explicit path enumeration on small graphs.
"""

from __future__ import annotations

from collections import deque
from graphlib import TopologicalSorter
from typing import Iterable


class CausalGraph:
    """A DAG whose nodes are partitioned into exogenous and endogenous."""

    def __init__(self, exogenous: Iterable[str], endogenous: Iterable[str],
                 edges: Iterable[tuple[str, str]]):
        self.exogenous = tuple(exogenous)
        self.endogenous = tuple(endogenous)
        overlap = set(self.exogenous) & set(self.endogenous)
        if overlap:
            raise ValueError(
                f"nodes are both exogenous and endogenous: {sorted(overlap)}")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node label")
        known = set(self.nodes)
        self._parents: dict[str, set[str]] = {n: set() for n in self.nodes}
        self._children: dict[str, set[str]] = {n: set() for n in self.nodes}
        self.edges: tuple[tuple[str, str], ...] = tuple(edges)
        for tail, head in self.edges:
            for n in (tail, head):
                if n not in known:
                    raise ValueError(f"edge endpoint '{n}' is not a node")
            if head in self._children[tail]:
                raise ValueError(f"duplicate edge {tail} -> {head}")
            self._children[tail].add(head)
            self._parents[head].add(tail)
        # TopologicalSorter raises CycleError on cyclic input.
        ts = TopologicalSorter({n: self._parents[n] for n in self.nodes})
        self.topological_order: tuple[str, ...] = tuple(ts.static_order())

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.exogenous + self.endogenous

    def kind(self, node: str) -> str:
        if node in self._parents:
            return "exogenous" if node in set(self.exogenous) else "endogenous"
        raise KeyError(node)

    def parents(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(self._parents[node]))

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(self._children[node]))

    def out_degree(self, node: str) -> int:
        return len(self._children[node])

    def ancestors(self, nodes: Iterable[str]) -> set[str]:
        """All strict ancestors of the given nodes."""
        return self._reach(nodes, self._parents)

    def descendants(self, nodes: Iterable[str]) -> set[str]:
        """All strict descendants of the given nodes."""
        return self._reach(nodes, self._children)

    def _reach(self, start: Iterable[str],
               step: dict[str, set[str]]) -> set[str]:
        out: set[str] = set()
        queue = deque(start)
        while queue:
            for nxt in step[queue.popleft()]:
                if nxt not in out:
                    out.add(nxt)
                    queue.append(nxt)
        return out

    def mutilate(self, remove_into: Iterable[str] = (),
                 remove_out_of: Iterable[str] = ()) -> "CausalGraph":
        """Drop all edges into remove_into and out of remove_out_of."""
        into = set(remove_into)
        out_of = set(remove_out_of)
        for n in into | out_of:
            if n not in self._parents:
                raise ValueError(f"unknown node '{n}'")
        kept = [(t, h) for t, h in self.edges
                if h not in into and t not in out_of]
        return CausalGraph(self.exogenous, self.endogenous, kept)

    def to_dot(self) -> str:
        """DOT rendering: dashed ellipses for exogenous nodes, solid for
        endogenous; node and edge order is deterministic."""
        lines = ["digraph causal {"]
        for n in self.exogenous:
            lines.append(f'  "{n}" [shape=ellipse, style=dashed];')
        for n in self.endogenous:
            lines.append(f'  "{n}" [shape=ellipse, style=solid];')
        for tail, head in sorted(self.edges):
            lines.append(f'  "{tail}" -> "{head}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _check_sets(g: CausalGraph, named: dict[str, Iterable[str]],
                disjoint: tuple[tuple[str, str], ...]) -> dict[str, set[str]]:
    known = set(g.nodes)
    sets = {}
    for label, nodes in named.items():
        s = set(nodes)
        unknown = s - known
        if unknown:
            raise ValueError(f"unknown node(s) in {label}: {sorted(unknown)}")
        sets[label] = s
    for a, b in disjoint:
        overlap = sets[a] & sets[b]
        if overlap:
            raise ValueError(f"{a} and {b} overlap on: {sorted(overlap)}")
    return sets


def d_separated(g: CausalGraph, x: Iterable[str], y: Iterable[str],
                z: Iterable[str]) -> bool:
    """True when every path between the sets X and Y is blocked by Z."""
    sets = _check_sets(g, {"X": x, "Y": y, "Z": z},
                       (("X", "Y"), ("X", "Z"), ("Y", "Z")))
    xs, ys, zs = sets["X"], sets["Y"], sets["Z"]
    if not xs or not ys:
        raise ValueError("X and Y must be nonempty")
    # Standard reachability over (node, direction) states.  Direction "up"
    # means the trail arrived from a child, "down" from a parent.
    collider_open = zs | g.ancestors(zs)
    visited: set[tuple[str, str]] = set()
    queue: deque[tuple[str, str]] = deque((s, "up") for s in xs)
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in ys and node not in zs:
            return False
        if direction == "up":
            if node in zs:
                continue
            for p in g.parents(node):
                queue.append((p, "up"))
            for c in g.children(node):
                queue.append((c, "down"))
        else:
            if node not in zs:
                for c in g.children(node):
                    queue.append((c, "down"))
            if node in collider_open:
                for p in g.parents(node):
                    queue.append((p, "up"))
    return True


def rule1_applies(g: CausalGraph, x: Iterable[str], y: Iterable[str],
                  z: Iterable[str], w: Iterable[str]) -> bool:
    """Observation deletion: Pr(y | do(x), z, w) = Pr(y | do(x), w) is
    licensed when Y and Z are d-separated by X union W with all edges into
    X removed."""
    xs, ys, zs, ws = (set(s) for s in (x, y, z, w))
    cut = g.mutilate(remove_into=xs)
    return d_separated(cut, ys, zs, xs | ws)


def rule2_applies(g: CausalGraph, x: Iterable[str], y: Iterable[str],
                  z: Iterable[str], w: Iterable[str]) -> bool:
    """Action/observation exchange: Pr(y | do(x), do(z), w) =
    Pr(y | do(x), z, w) is licensed when Y and Z are d-separated by X union
    W after removing edges into X and out of Z."""
    xs, ys, zs, ws = (set(s) for s in (x, y, z, w))
    cut = g.mutilate(remove_into=xs, remove_out_of=zs)
    return d_separated(cut, ys, zs, xs | ws)


def rule3_applies(g: CausalGraph, x: Iterable[str], y: Iterable[str],
                  z: Iterable[str], w: Iterable[str]) -> bool:
    """Action deletion: Pr(y | do(x), do(z), w) = Pr(y | do(x), w) is
    licensed when Y and Z are d-separated by X union W in the graph with
    edges into X removed, and additionally edges into Z(W) removed, where
    Z(W) are the Z-nodes that are not ancestors of any W-node once the
    X-edges are gone."""
    xs, ys, zs, ws = (set(s) for s in (x, y, z, w))
    no_x = g.mutilate(remove_into=xs)
    w_anc = ws | no_x.ancestors(ws)
    z_w = {n for n in zs if n not in w_anc}
    cut = no_x.mutilate(remove_into=z_w)
    return d_separated(cut, ys, zs, xs | ws)


def satisfies_backdoor(g: CausalGraph, x: Iterable[str], y: Iterable[str],
                       z: Iterable[str]) -> bool:
    """Back-door criterion: no Z-node descends from X, and Z blocks every
    X-Y path that starts with an edge into X.

    Removing the edges out of X deletes exactly the paths that leave X
    through an outgoing edge, so the remaining paths are the back-door
    ones and blocking reduces to d-separation in the cut graph.
    """
    sets = _check_sets(g, {"X": x, "Y": y, "Z": z},
                       (("X", "Y"), ("X", "Z"), ("Y", "Z")))
    xs, ys, zs = sets["X"], sets["Y"], sets["Z"]
    if zs & g.descendants(xs):
        return False
    return d_separated(g.mutilate(remove_out_of=xs), xs, ys, zs)


def sink_intervention_trivial(g: CausalGraph, x: Iterable[str]) -> bool:
    """True when every intervention target is a sink (out-degree zero), in
    which case do(x) cannot move the distribution of the other variables."""
    xs = set(x)
    if not xs:
        raise ValueError("intervention target set is empty")
    for n in xs:
        if n not in set(g.endogenous):
            raise ValueError(f"intervention target '{n}' is not endogenous")
    return all(g.out_degree(n) == 0 for n in xs)
