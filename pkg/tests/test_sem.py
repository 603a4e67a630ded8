from __future__ import annotations

import itertools

import pytest

from causalcirc.courses import COURSES_SEM_TEXT, COURSES_TABLE, build_courses_sem
from causalcirc.errors import ParseError, ZeroEvidenceError
from causalcirc.formula import Var, parse_formula
from causalcirc.sem import (
    Sem,
    TabularDistribution,
    abduct,
    counterfactual,
    cpd,
    intervene_surgery,
    interventional_adjustment_prob,
    interventional_surgery_prob,
    joint,
    parse_sem,
    serialize_sem,
    solve,
)

TOL = 1e-12


@pytest.fixture(scope="module")
def sem():
    return build_courses_sem()


@pytest.fixture(scope="module")
def dist(sem):
    return joint(sem)


def v(sem, name):
    return sem.var(name)


class TestTabularDistribution:
    U = (Var(0, "a"), Var(1, "b"))

    def test_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sums to"):
            TabularDistribution(self.U, {(True, True): 0.9})

    def test_key_length(self):
        with pytest.raises(ValueError, match="universe size"):
            TabularDistribution(self.U, {(True,): 1.0})

    def test_negative_probability(self):
        with pytest.raises(ValueError, match="not in"):
            TabularDistribution(self.U, {(True, True): 1.5,
                                         (True, False): -0.5})

    def test_lookup_and_marginals(self):
        a, b = self.U
        d = TabularDistribution(self.U, {(True, True): 0.25,
                                         (False, True): 0.75})
        assert d.prob({a: True, b: True}) == 0.25
        assert d.prob({a: True, b: False}) == 0.0
        assert d.marginal_mass({b: True}) == 1.0
        assert d.marginal_mass({}) == 1.0
        small = d.marginal((a,))
        assert small.prob({a: False}) == 0.75

    def test_unknown_variable(self):
        d = TabularDistribution(self.U, {(True, True): 1.0})
        with pytest.raises(ValueError, match="unknown"):
            d.marginal_mass({Var(9, "z"): True})


class TestSemValidation:
    def u(self):
        h = Var(0, "h")
        x = Var(1, "x")
        return h, x, TabularDistribution((h,), {(True,): 1.0})

    def test_equation_for_every_endogenous(self):
        h, x, d = self.u()
        with pytest.raises(ValueError, match="must have equations"):
            Sem((h,), (x,), {}, d)

    def test_unknown_variable_in_equation(self):
        h, x, d = self.u()
        stray = Var(7, "q")
        with pytest.raises(ValueError, match="unknown variable"):
            Sem((h,), (x,), {x: parse_formula("q", [stray])}, d)

    def test_cyclic_equations_rejected(self):
        h, x, d = self.u()
        y = Var(2, "y")
        eqs = {x: parse_formula("y", [y]), y: parse_formula("x", [x])}
        with pytest.raises(Exception):
            Sem((h,), (x, y), eqs, d)

    def test_distribution_universe_must_match(self):
        h, x, d = self.u()
        other = TabularDistribution((x,), {(True,): 1.0})
        with pytest.raises(ValueError, match="match the exogenous"):
            Sem((h,), (x,), {x: parse_formula("h", [h])}, other)

    def test_duplicate_names(self):
        h, x, d = self.u()
        clash = Var(5, "h")
        with pytest.raises(ValueError, match="not unique"):
            Sem((h,), (clash,), {clash: parse_formula("h", [h])}, d)


class TestSolveAndJoint:
    def test_solve_one_world(self, sem):
        u = {v(sem, "H_1"): True, v(sem, "H_2"): False,
             v(sem, "H_3"): False, v(sem, "H_4"): True}
        world = solve(sem, u)
        assert world[v(sem, "A")] and world[v(sem, "P")]
        assert not world[v(sem, "L")] and not world[v(sem, "K")]
        assert world[v(sem, "X_1")]       # P & A
        assert world[v(sem, "X_5")]       # !L & !K
        assert world[v(sem, "X_9")]       # X_1 & X_5
        assert world[v(sem, "X_10")]
        assert not world[v(sem, "X_2")]

    def test_solve_requires_total_exogenous(self, sem):
        with pytest.raises(ValueError, match="total assignment"):
            solve(sem, {v(sem, "H_1"): True})

    def test_joint_reproduces_table(self, sem, dist):
        for (l, k, p, a), want in COURSES_TABLE.items():
            key = {v(sem, "L"): bool(l), v(sem, "K"): bool(k),
                   v(sem, "P"): bool(p), v(sem, "A"): bool(a)}
            assert dist.marginal_mass(key) == pytest.approx(want, abs=TOL)

    def test_headline_marginal(self, sem, dist):
        assert dist.marginal_mass({v(sem, "X_9"): True}) == pytest.approx(
            0.54, abs=TOL)
        assert dist.marginal_mass({v(sem, "X_10"): True}) == pytest.approx(
            0.808, abs=TOL)

    def test_conditional(self, sem, dist):
        got = (dist.marginal_mass({v(sem, "X_9"): True, v(sem, "A"): True})
               / dist.marginal_mass({v(sem, "A"): True}))
        assert got == pytest.approx(0.54 / 0.67, abs=TOL)


class TestSurgery:
    def test_replaces_equation(self, sem):
        cut = intervene_surgery(sem, {v(sem, "P"): True})
        assert cut.graph.parents("P") == ()
        # untouched input
        assert sem.graph.parents("P") == ("H_4",)

    def test_surgery_probability(self, sem):
        got = interventional_surgery_prob(
            sem, {v(sem, "X_9"): True}, {v(sem, "X_1"): True})
        assert got == pytest.approx(0.60, abs=TOL)

    def test_surgery_on_original(self, sem):
        # forcing P makes X_1 copy A
        got = interventional_surgery_prob(
            sem, {v(sem, "X_1"): True}, {v(sem, "P"): True})
        assert got == pytest.approx(0.67, abs=TOL)

    def test_sink_surgery_leaves_rest_alone(self, sem, dist):
        cut = joint(intervene_surgery(sem, {v(sem, "X_10"): False}))
        for name in ("A", "L", "K", "P", "X_1", "X_9"):
            var = v(sem, name)
            assert cut.marginal_mass({var: True}) == pytest.approx(
                dist.marginal_mass({var: True}), abs=TOL)

    def test_do_validation(self, sem):
        with pytest.raises(ValueError, match="empty"):
            intervene_surgery(sem, {})
        with pytest.raises(ValueError, match="exogenous"):
            intervene_surgery(sem, {v(sem, "H_1"): True})
        with pytest.raises(ValueError, match="unknown"):
            intervene_surgery(sem, {Var(99, "nope"): True})


class TestAdjustment:
    def test_headline_value(self, sem):
        got = interventional_adjustment_prob(
            sem, {v(sem, "X_9"): True}, {v(sem, "X_1"): True})
        assert got == pytest.approx(0.54, abs=TOL)

    def test_equals_joint_mass(self, sem, dist):
        got = interventional_adjustment_prob(
            sem, {v(sem, "X_10"): True}, {v(sem, "X_2"): True})
        assert got == pytest.approx(0.144, abs=TOL)
        assert got == pytest.approx(
            dist.marginal_mass({v(sem, "X_10"): True, v(sem, "X_2"): True}),
            abs=TOL)

    def test_diverges_from_surgery(self, sem):
        target = {v(sem, "X_9"): True}
        action = {v(sem, "X_1"): True}
        surgery = interventional_surgery_prob(sem, target, action)
        adjusted = interventional_adjustment_prob(sem, target, action)
        assert abs(surgery - adjusted) > 0.05

    def test_query_inside_parent_stratum(self, sem, dist):
        # P is a parent of X_1; strata that contradict the query must
        # contribute zero rather than being re-assigned
        for x1_val in (False, True):
            got = interventional_adjustment_prob(
                sem, {v(sem, "P"): True}, {v(sem, "X_1"): x1_val})
            want = dist.marginal_mass(
                {v(sem, "P"): True, v(sem, "X_1"): x1_val})
            assert got == pytest.approx(want, abs=TOL)

    def test_single_variable_only(self, sem):
        with pytest.raises(ValueError, match="single"):
            interventional_adjustment_prob(
                sem, {v(sem, "X_9"): True},
                {v(sem, "X_1"): True, v(sem, "X_2"): True})

    def test_target_checks(self, sem):
        with pytest.raises(ValueError, match="exogenous"):
            interventional_adjustment_prob(
                sem, {v(sem, "X_9"): True}, {v(sem, "H_1"): True})


class TestAbduction:
    def test_posterior_is_normalized(self, sem):
        post = abduct(sem, {v(sem, "X_1"): False})
        assert sum(p for _, p in post.items()) == pytest.approx(1.0, abs=TOL)
        # every world with X_1 = 0 in the table has A = 0
        assert post.marginal_mass({v(sem, "H_1"): True}) == 0.0

    def test_normalizer(self, sem, dist):
        assert dist.marginal_mass({v(sem, "X_1"): False}) == pytest.approx(
            0.33, abs=TOL)
        assert dist.marginal_mass({v(sem, "X_9"): False}) == pytest.approx(
            0.46, abs=TOL)

    def test_zero_evidence(self, sem):
        with pytest.raises(ZeroEvidenceError):
            abduct(sem, {v(sem, "X_9"): True, v(sem, "X_2"): True})

    def test_evidence_must_be_endogenous(self, sem):
        with pytest.raises(ValueError, match="endogenous"):
            abduct(sem, {v(sem, "H_1"): True})


class TestCounterfactual:
    def test_reference_value(self, sem):
        got = counterfactual(sem, {v(sem, "X_9"): True},
                             {v(sem, "A"): True}, {v(sem, "X_9"): False})
        assert got == pytest.approx(0.06 / 0.46, abs=TOL)

    def test_impossible_rescue(self, sem):
        # forcing P cannot flip X_1 because every X_1=0 world has A=0
        got = counterfactual(sem, {v(sem, "X_1"): True},
                             {v(sem, "P"): True}, {v(sem, "X_1"): False})
        assert got == 0.0

    def test_action_consistent_with_evidence(self, sem, dist):
        # when the action already holds in the evidence worlds, the
        # counterfactual collapses to the observational conditional
        got = counterfactual(sem, {v(sem, "X_9"): True},
                             {v(sem, "A"): True}, {v(sem, "A"): True})
        want = (dist.marginal_mass({v(sem, "X_9"): True, v(sem, "A"): True})
                / dist.marginal_mass({v(sem, "A"): True}))
        assert got == pytest.approx(want, abs=TOL)


class TestCpd:
    def test_partial_parent_assignment(self, sem):
        got = cpd(sem, v(sem, "X_1"), {v(sem, "P"): True})
        assert got == pytest.approx(0.67 / 0.82, abs=TOL)

    def test_substitution_short_circuits(self, sem):
        assert cpd(sem, v(sem, "X_1"), {v(sem, "P"): False}) == 0.0
        assert cpd(sem, v(sem, "X_1"),
                   {v(sem, "P"): True, v(sem, "A"): True}) == 1.0

    def test_empty_assignment_is_marginal(self, sem, dist):
        got = cpd(sem, v(sem, "X_1"), {})
        assert got == pytest.approx(
            dist.marginal_mass({v(sem, "X_1"): True}), abs=TOL)

    def test_non_parent_rejected(self, sem):
        with pytest.raises(ValueError, match="non-parents"):
            cpd(sem, v(sem, "X_1"), {v(sem, "L"): True})

    def test_zero_probability_parents(self):
        text = (
            "var u exo\nvar w exo\n"
            "var a endo\nvar b endo\nvar d endo\nvar c endo\n"
            "eq a = u\neq b = u\neq d = w\neq c = (a | b) & d\n"
            "dist\n00 0.25\n01 0.25\n10 0.25\n11 0.25\n")
        m = parse_sem(text)
        # a and b always agree, so a=0, b=1 never happens
        with pytest.raises(ZeroEvidenceError):
            cpd(m, m.var("c"), {m.var("a"): False, m.var("b"): True})


class TestTextFormat:
    def test_round_trip_fixed_point(self, sem):
        text = serialize_sem(sem)
        assert serialize_sem(parse_sem(text)) == text

    def test_round_trip_preserves_joint(self, sem, dist):
        again = parse_sem(serialize_sem(sem))
        redone = joint(again)
        for key, p in dist.probs.items():
            assert redone.probs.get(key, 0.0) == pytest.approx(p, abs=1e-15)

    def test_comments_ignored(self):
        assert parse_sem(COURSES_SEM_TEXT) is not None

    def test_unknown_kind(self):
        with pytest.raises(ParseError, match="unknown sem line kind"):
            parse_sem("vars x endo\n")

    def test_bad_var_line(self):
        with pytest.raises(ParseError, match="exo|endo"):
            parse_sem("var x middle\n")

    def test_duplicate_variable(self):
        with pytest.raises(ParseError, match="duplicate variable"):
            parse_sem("var x endo\nvar x endo\n")

    def test_equation_for_undeclared(self):
        with pytest.raises(ParseError, match="undeclared variable 'y'"):
            parse_sem("var h exo\nvar x endo\neq x = h\neq y = h\n"
                      "dist\n0 0.5\n1 0.5\n")

    def test_duplicate_equation(self):
        with pytest.raises(ParseError, match="duplicate equation"):
            parse_sem("var h exo\nvar x endo\neq x = h\neq x = !h\n"
                      "dist\n0 0.5\n1 0.5\n")

    def test_equation_parse_error_names_variable(self):
        with pytest.raises(ParseError, match="in equation for 'x'"):
            parse_sem("var h exo\nvar x endo\neq x = h &\n"
                      "dist\n0 0.5\n1 0.5\n")

    def test_missing_dist(self):
        with pytest.raises(ParseError, match="missing 'dist'"):
            parse_sem("var h exo\nvar x endo\neq x = h\n")

    def test_bits_length(self):
        with pytest.raises(ParseError, match="one 0/1 per exogenous"):
            parse_sem("var h exo\nvar x endo\neq x = h\ndist\n00 1.0\n")

    def test_duplicate_row(self):
        with pytest.raises(ParseError, match="duplicate table row"):
            parse_sem("var h exo\nvar x endo\neq x = h\n"
                      "dist\n1 0.5\n1 0.5\n")

    def test_unnormalized_table(self):
        with pytest.raises(ParseError, match="sums to"):
            parse_sem("var h exo\nvar x endo\neq x = h\ndist\n1 0.9\n")
