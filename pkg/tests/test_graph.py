from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalcirc.courses import build_courses_sem
from causalcirc.graph import (
    CausalGraph,
    d_separated,
    rule1_applies,
    rule2_applies,
    rule3_applies,
    satisfies_backdoor,
    sink_intervention_trivial,
)

from generators import random_dag


def chain():
    return CausalGraph((), ("a", "b", "c"), (("a", "b"), ("b", "c")))


def fork():
    return CausalGraph((), ("a", "b", "c"), (("a", "b"), ("a", "c")))


def collider():
    return CausalGraph((), ("a", "b", "c", "d"),
                       (("a", "c"), ("b", "c"), ("c", "d")))


def confounder():
    # z -> x, z -> y, x -> y
    return CausalGraph((), ("x", "y", "z"),
                       (("z", "x"), ("z", "y"), ("x", "y")))


class TestConstruction:
    def test_cycle_rejected(self):
        with pytest.raises(Exception):
            CausalGraph((), ("a", "b"), (("a", "b"), ("b", "a")))

    def test_self_loop_rejected(self):
        with pytest.raises(Exception):
            CausalGraph((), ("a",), (("a", "a"),))

    def test_duplicate_edge_rejected(self):
        with pytest.raises(ValueError, match="duplicate edge"):
            CausalGraph((), ("a", "b"), (("a", "b"), ("a", "b")))

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(ValueError, match="'c' is not a node"):
            CausalGraph((), ("a", "b"), (("a", "c"),))

    def test_kind_overlap_rejected(self):
        with pytest.raises(ValueError, match="both exogenous and endogenous"):
            CausalGraph(("a",), ("a", "b"), ())

    def test_duplicate_label_rejected(self):
        with pytest.raises(ValueError, match="duplicate node label"):
            CausalGraph((), ("a", "a"), ())

    def test_topological_order_respects_edges(self):
        g = collider()
        pos = {n: i for i, n in enumerate(g.topological_order)}
        for tail, head in g.edges:
            assert pos[tail] < pos[head]


class TestRelations:
    def test_parents_children(self):
        g = collider()
        assert g.parents("c") == ("a", "b")
        assert g.children("c") == ("d",)
        assert g.out_degree("d") == 0

    def test_ancestors_descendants(self):
        g = collider()
        assert g.ancestors(["d"]) == {"a", "b", "c"}
        assert g.descendants(["a"]) == {"c", "d"}
        assert g.descendants(["d"]) == set()

    def test_kind(self):
        g = CausalGraph(("u",), ("v",), (("u", "v"),))
        assert g.kind("u") == "exogenous"
        assert g.kind("v") == "endogenous"
        with pytest.raises(KeyError):
            g.kind("w")


class TestMutilate:
    def test_remove_into(self):
        g = confounder()
        cut = g.mutilate(remove_into=["x"])
        assert cut.parents("x") == ()
        assert cut.parents("y") == ("x", "z")

    def test_remove_out_of(self):
        g = confounder()
        cut = g.mutilate(remove_out_of=["x"])
        assert cut.children("x") == ()
        assert cut.parents("y") == ("z",)

    def test_original_untouched(self):
        g = confounder()
        g.mutilate(remove_into=["x"], remove_out_of=["z"])
        assert g.parents("x") == ("z",)

    def test_surgery_on_enrollment_graph(self):
        g = build_courses_sem().graph
        assert g.parents("P") == ("H_4",)
        cut = g.mutilate(remove_into=["P"])
        assert cut.parents("P") == ()
        assert cut.parents("X_1") == ("A", "P")

    def test_unknown_node(self):
        with pytest.raises(ValueError, match="unknown node"):
            confounder().mutilate(remove_into=["q"])


class TestDot:
    def test_shape(self):
        g = CausalGraph(("u",), ("v",), (("u", "v"),))
        dot = g.to_dot()
        assert dot.startswith("digraph causal {")
        assert '"u" [shape=ellipse, style=dashed];' in dot
        assert '"v" [shape=ellipse, style=solid];' in dot
        assert '"u" -> "v";' in dot
        assert dot.rstrip().endswith("}")

    def test_deterministic(self):
        g = build_courses_sem().graph
        assert g.to_dot() == g.to_dot()


class TestDSeparation:
    def test_chain(self):
        g = chain()
        assert not d_separated(g, {"a"}, {"c"}, set())
        assert d_separated(g, {"a"}, {"c"}, {"b"})

    def test_fork(self):
        g = fork()
        assert not d_separated(g, {"b"}, {"c"}, set())
        assert d_separated(g, {"b"}, {"c"}, {"a"})

    def test_collider(self):
        g = collider()
        assert d_separated(g, {"a"}, {"b"}, set())
        assert not d_separated(g, {"a"}, {"b"}, {"c"})
        # conditioning on a collider's descendant also opens it
        assert not d_separated(g, {"a"}, {"b"}, {"d"})

    def test_set_arguments(self):
        g = collider()
        assert d_separated(g, {"a"}, {"b", "d"}, set()) is False

    def test_validation(self):
        g = chain()
        with pytest.raises(ValueError, match="overlap"):
            d_separated(g, {"a"}, {"a"}, set())
        with pytest.raises(ValueError, match="nonempty"):
            d_separated(g, set(), {"c"}, {"b"})
        with pytest.raises(ValueError, match="unknown node"):
            d_separated(g, {"a"}, {"q"}, set())


def d_separated_oracle(g: CausalGraph, xs, ys, zs) -> bool:
    """Explicit path enumeration; exponential and only for tiny graphs."""
    directed = set(g.edges)
    neighbours = {n: set() for n in g.nodes}
    for t, h in g.edges:
        neighbours[t].add(h)
        neighbours[h].add(t)
    z_or_desc = set(zs)
    for z in zs:
        z_or_desc |= g.ancestors([z])  # nodes with a descendant in Z

    def blocked(path) -> bool:
        for i in range(1, len(path) - 1):
            u, w, v = path[i - 1], path[i], path[i + 1]
            is_collider = (u, w) in directed and (v, w) in directed
            if is_collider:
                if w not in z_or_desc:
                    return True
            elif w in zs:
                return True
        return False

    def paths(u, target, seen):
        if u in target:
            yield tuple(seen)
            return
        for n in neighbours[u]:
            if n not in seen:
                yield from paths(n, target, seen + [n])

    for x in xs:
        for path in paths(x, set(ys), [x]):
            if not blocked(path):
                return False
    return True


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_d_separation_matches_path_enumeration(seed):
    rng = random.Random(seed)
    g = random_dag(rng, rng.randint(3, 6))
    names = list(g.endogenous)
    for x, y in itertools.combinations(names, 2):
        rest = [n for n in names if n not in (x, y)]
        for r in range(len(rest) + 1):
            for z in itertools.combinations(rest, r):
                got = d_separated(g, {x}, {y}, set(z))
                want = d_separated_oracle(g, {x}, {y}, set(z))
                assert got == want, (g.edges, x, y, z)


class TestDoCalculusRules:
    def test_rule1_ignorable_observation(self):
        # z has no connection to y once x is fixed
        g = CausalGraph((), ("x", "y", "z"), (("x", "y"),))
        assert rule1_applies(g, {"x"}, {"y"}, {"z"}, set())
        g2 = CausalGraph((), ("x", "y", "z"), (("x", "y"), ("z", "y")))
        assert not rule1_applies(g2, {"x"}, {"y"}, {"z"}, set())

    def test_rule2_backdoor_exchange(self):
        g = confounder()
        # conditioning on the confounder licenses do(x) ~ observe(x)
        assert rule2_applies(g, set(), {"y"}, {"x"}, {"z"})
        assert not rule2_applies(g, set(), {"y"}, {"x"}, set())

    def test_rule3_sink_deletion(self):
        g = CausalGraph((), ("x", "y", "z"), (("x", "y"), ("y", "z")))
        assert rule3_applies(g, set(), {"y"}, {"z"}, set())
        # but intervening upstream of y is not removable
        assert not rule3_applies(g, set(), {"y"}, {"x"}, set())

    def test_rule3_keeps_edges_into_ancestors_of_w(self):
        # z -> w and z -> y: given w, do(z) still reaches y directly
        g = CausalGraph((), ("y", "z", "w"), (("z", "w"), ("z", "y")))
        assert not rule3_applies(g, set(), {"y"}, {"z"}, {"w"})
        # z -> w only: conditioning on w absorbs everything do(z) could do
        g2 = CausalGraph((), ("y", "z", "w"), (("z", "w"), ("w", "y")))
        assert rule3_applies(g2, set(), {"y"}, {"z"}, {"w"})

    def test_rule3_removes_edges_into_non_ancestors(self):
        # y -> z (a sink) plus an unrelated w child of y
        g = CausalGraph((), ("y", "z", "w"), (("y", "z"), ("y", "w")))
        assert rule3_applies(g, set(), {"y"}, {"z"}, {"w"})


class TestBackdoor:
    def test_confounder_set(self):
        g = confounder()
        assert satisfies_backdoor(g, {"x"}, {"y"}, {"z"})

    def test_descendant_disqualifies(self):
        g = CausalGraph((), ("x", "y", "d"), (("x", "y"), ("x", "d")))
        assert not satisfies_backdoor(g, {"x"}, {"y"}, {"d"})

    def test_open_backdoor_path(self):
        g = confounder()
        # without z the path x <- z -> y stays open, so no empty-set
        # criterion; use a dummy node to keep Z nonempty
        g2 = CausalGraph((), ("x", "y", "z", "q"),
                         (("z", "x"), ("z", "y"), ("x", "y")))
        assert not satisfies_backdoor(g2, {"x"}, {"y"}, {"q"})

    def test_enrollment_graph(self):
        g = build_courses_sem().graph
        assert satisfies_backdoor(g, {"X_1"}, {"X_9"}, {"P", "A"})
        assert not satisfies_backdoor(g, {"X_1"}, {"X_9"}, {"X_10"})


class TestSinkTriviality:
    def test_sinks_are_trivial(self):
        g = build_courses_sem().graph
        assert sink_intervention_trivial(g, {"X_10"})
        assert not sink_intervention_trivial(g, {"X_1"})

    def test_validation(self):
        g = build_courses_sem().graph
        with pytest.raises(ValueError, match="empty"):
            sink_intervention_trivial(g, set())
        with pytest.raises(ValueError, match="not endogenous"):
            sink_intervention_trivial(g, {"H_1"})

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_sinks_imply_rule3(self, seed):
        rng = random.Random(seed)
        g = random_dag(rng, rng.randint(2, 6))
        sinks = {n for n in g.endogenous if g.out_degree(n) == 0}
        for r in range(1, len(sinks) + 1):
            for xs in itertools.combinations(sorted(sinks), r):
                rest = set(g.nodes) - set(xs)
                if not rest:
                    continue
                assert sink_intervention_trivial(g, set(xs))
                assert rule3_applies(g, set(), rest, set(xs), set())
