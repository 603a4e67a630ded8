"""The course-enrollment example that the test suite and the `reproduce`
command check against.

Four Boolean variables describe a student: L (logic), K (knowledge
representation), P (probability) and A (AI).  ``COURSES_TABLE`` is the
reference enrollment distribution over (L, K, P, A); nine assignments have
positive probability.  ``build_courses_psdd`` reconstructs it exactly as a
circuit over the vtree ((L, K), (P, A)), with parameters read off the
table as conditional proportions.  ``build_courses_sem`` is the matching
structural model: H_1..H_4 feed A, L, K, P, and the augmented nodes
X_1..X_10 encode the support formula

    ((!L & K) & (P & A)) | ((L & K) & ((!P & !A) | (P & A)))
                         | ((!L & !K) & (P & A))

with X_1 = P & A shared by three consumers and X_10 the root.

Note the two fixtures are deliberately independent: the support of the
table (9 assignments) is not the model set of the formula (4 assignments).
Each stands on its own and nothing here tries to reconcile them.

``reproduce()`` recomputes the headline numbers (the full table by both
routes, one counterfactual, one marginal, one conditional) and reports
expected against actual, which is what the CLI's `reproduce` command
prints.
"""

from __future__ import annotations

from dataclasses import dataclass

from .compiler import compile_psdd
from .psdd import (
    Decision,
    Element,
    Psdd,
    TerminalFalse,
    TerminalLiteral,
    TerminalTrue,
    Vtree,
    VtreeInternal,
    VtreeLeaf,
)
from .formula import Var
from .sem import Sem, TabularDistribution, joint, parse_sem

# Enrollment probabilities keyed by (L, K, P, A); rows sum to one.
COURSES_TABLE: dict[tuple[int, int, int, int], float] = {
    (0, 0, 1, 0): 0.06,
    (0, 0, 1, 1): 0.54,
    (0, 1, 1, 1): 0.10,
    (1, 0, 0, 0): 0.036,
    (1, 0, 1, 0): 0.018,
    (1, 0, 1, 1): 0.006,
    (1, 1, 0, 0): 0.144,
    (1, 1, 1, 0): 0.072,
    (1, 1, 1, 1): 0.024,
}


def build_courses_vtree() -> Vtree:
    leaf_l = VtreeLeaf(0, Var(0, "L"))
    leaf_k = VtreeLeaf(1, Var(1, "K"))
    left = VtreeInternal(2, leaf_l, leaf_k)
    leaf_p = VtreeLeaf(3, Var(2, "P"))
    leaf_a = VtreeLeaf(4, Var(3, "A"))
    right = VtreeInternal(5, leaf_p, leaf_a)
    return Vtree(VtreeInternal(6, left, right))


def build_courses_psdd() -> Psdd:
    """The enrollment table as a circuit.

    The root branches on the four (L, K) blocks with the block masses
    0.60 / 0.10 / 0.06 / 0.24 as weights; each sub carries the (P, A)
    distribution inside its block.  Both L=1 blocks share one sub because
    their conditional (P, A) distributions coincide in the table.
    """
    vt = build_courses_vtree()
    l_pos = TerminalLiteral(0, True)
    l_neg = TerminalLiteral(0, False)
    k_pos = TerminalLiteral(1, True)
    k_neg = TerminalLiteral(1, False)
    k_none = TerminalFalse(1)
    prime_00 = Decision(2, (Element(l_neg, k_neg, 1.0),
                            Element(l_pos, k_none, 0.0)))
    prime_01 = Decision(2, (Element(l_neg, k_pos, 1.0),
                            Element(l_pos, k_none, 0.0)))
    prime_10 = Decision(2, (Element(l_pos, k_neg, 1.0),
                            Element(l_neg, k_none, 0.0)))
    prime_11 = Decision(2, (Element(l_pos, k_pos, 1.0),
                            Element(l_neg, k_none, 0.0)))
    p_pos = TerminalLiteral(3, True)
    p_neg = TerminalLiteral(3, False)
    a_pos = TerminalLiteral(4, True)
    a_neg = TerminalLiteral(4, False)
    a_none = TerminalFalse(4)
    # Block (L=0, K=0): P always 1, Pr(A=1 | P=1) = 0.54 / 0.60.
    sub_00 = Decision(5, (Element(p_pos, TerminalTrue(4, 0.9), 1.0),
                          Element(p_neg, a_none, 0.0)))
    # Block (L=0, K=1): the single assignment P=1, A=1.
    sub_01 = Decision(5, (Element(p_pos, a_pos, 1.0),
                          Element(p_neg, a_none, 0.0)))
    # Blocks (L=1, *): Pr(P=0)=0.6 with A=0, else Pr(A=1 | P=1) = 0.25.
    sub_1x = Decision(5, (Element(p_neg, a_neg, 0.6),
                          Element(p_pos, TerminalTrue(4, 0.25), 0.4)))
    root = Decision(6, (Element(prime_00, sub_00, 0.60),
                        Element(prime_01, sub_01, 0.10),
                        Element(prime_10, sub_1x, 0.06),
                        Element(prime_11, sub_1x, 0.24)))
    return Psdd(vt, root)


COURSES_SEM_TEXT = """\
# Structural model of the course-enrollment example.
# H_k is the exogenous source of the k-th original variable.
var H_1 exo
var H_2 exo
var H_3 exo
var H_4 exo
var A endo
var L endo
var K endo
var P endo
var X_1 endo
var X_2 endo
var X_3 endo
var X_4 endo
var X_5 endo
var X_6 endo
var X_7 endo
var X_8 endo
var X_9 endo
var X_10 endo
eq A = H_1
eq L = H_2
eq K = H_3
eq P = H_4
eq X_1 = P & A
eq X_2 = !P & !A
eq X_3 = !L & K
eq X_4 = L & K
eq X_5 = !L & !K
eq X_6 = X_1 | X_2
eq X_7 = X_1 & X_3
eq X_8 = X_4 & X_6
eq X_9 = X_1 & X_5
eq X_10 = X_7 | X_8 | X_9
dist
# bits are H_1 H_2 H_3 H_4, i.e. (A, L, K, P)
0001 0.06
1001 0.54
1011 0.1
0100 0.036
0101 0.018
1101 0.006
0110 0.144
0111 0.072
1111 0.024
"""


def build_courses_sem() -> Sem:
    return parse_sem(COURSES_SEM_TEXT)


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    actual: float

    def ok(self, tol: float) -> bool:
        return abs(self.expected - self.actual) <= tol


def reproduce() -> list[Check]:
    """Recompute the headline numbers of the worked example.

    Covers the full enrollment table through the fixture circuit and
    through the circuit compiled to a structural model, the counterfactual
    Pr(X_9=1 | do(A=1), X_9=0) = 0.06/0.46, the marginal Pr(X_9=1) = 0.54
    and the conditional Pr(X_9=1 | A=1) = 0.54/0.67.
    """
    from .sem import counterfactual

    checks: list[Check] = []
    psdd = build_courses_psdd()
    by_name = {v.name: v for v in psdd.universe}
    compiled = compile_psdd(psdd)
    compiled_marginal = joint(compiled.sem).marginal(compiled.originals)
    compiled_by_name = {v.name: v for v in compiled.originals}
    for (l, k, p, a), expected in sorted(COURSES_TABLE.items()):
        world = {by_name["L"]: bool(l), by_name["K"]: bool(k),
                 by_name["P"]: bool(p), by_name["A"]: bool(a)}
        checks.append(Check(
            f"table Pr(L={l},K={k},P={p},A={a}) via circuit",
            expected, psdd.probability(world)))
        key = {compiled_by_name["L"]: bool(l), compiled_by_name["K"]: bool(k),
               compiled_by_name["P"]: bool(p), compiled_by_name["A"]: bool(a)}
        checks.append(Check(
            f"table Pr(L={l},K={k},P={p},A={a}) via compiled model",
            expected, compiled_marginal.marginal_mass(key)))
    sem = build_courses_sem()
    a_var, x9 = sem.var("A"), sem.var("X_9")
    checks.append(Check(
        "counterfactual Pr(X_9=1 | do(A=1), X_9=0)",
        0.06 / 0.46,
        counterfactual(sem, {x9: True}, {a_var: True}, {x9: False})))
    dist = joint(sem)
    checks.append(Check(
        "marginal Pr(X_9=1)", 0.54, dist.marginal_mass({x9: True})))
    checks.append(Check(
        "conditional Pr(X_9=1 | A=1)", 0.54 / 0.67,
        dist.marginal_mass({x9: True, a_var: True})
        / dist.marginal_mass({a_var: True})))
    return checks
