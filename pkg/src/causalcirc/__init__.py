"""Causal reasoning on tractable probabilistic circuits.

Query PSDDs, read SPNs as bipartite Bayesian networks, run the graph side
of the do-calculus, and compile circuits into deterministic Boolean
structural equation models that support interventions (surgery and
parent-adjustment semantics) and counterfactuals.
"""

from .errors import EnumerationLimitError, ParseError, ZeroEvidenceError
from .formula import (
    FALSE,
    TRUE,
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
    evaluate,
    format_assignment,
    format_formula,
    lit,
    models,
    neg,
    nnf,
    parse_assignment,
    parse_formula,
    simplify,
    substitute,
    variables,
)
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
    parse_psdd,
    parse_vtree,
    serialize_psdd,
    serialize_vtree,
    validate,
)
from .spn import (
    BnTopology,
    Indicator,
    Product,
    Spn,
    StructureReport,
    Sum,
    check_structure,
    parse_spn,
    serialize_spn,
    to_bn_topology,
    verify_spn_triviality,
)
from .graph import (
    CausalGraph,
    d_separated,
    rule1_applies,
    rule2_applies,
    rule3_applies,
    satisfies_backdoor,
    sink_intervention_trivial,
)
from .sem import (
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
from .compiler import (
    CompilationResult,
    check_consistency,
    compile_formula,
    compile_psdd,
    naming_sidecar,
)
from .courses import (
    COURSES_SEM_TEXT,
    COURSES_TABLE,
    build_courses_psdd,
    build_courses_sem,
    build_courses_vtree,
    reproduce,
)

__version__ = "0.1.0"
