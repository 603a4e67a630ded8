"""HTTP service exposing the package's query engine.

The service is stateless: every request carries the model text(s) it
operates on, so the endpoints mirror the CLI subcommands one to one.
Malformed models and violated preconditions map to HTTP 400 with a
one-line detail message.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import courses
from .compiler import compile_psdd, naming_sidecar
from .errors import EnumerationLimitError, ParseError, ZeroEvidenceError
from .formula import parse_assignment
from .psdd import Psdd, parse_psdd, parse_vtree, validate
from .sem import (
    Sem,
    counterfactual,
    interventional_adjustment_prob,
    interventional_surgery_prob,
    joint,
    parse_sem,
    serialize_sem,
)
from .spn import parse_spn, to_bn_topology, verify_spn_triviality

app = FastAPI(
    title="causalcirc",
    description="Interventions and counterfactuals on probabilistic circuits.",
    version="0.1.0",
)

SEMANTICS_NOTICE = (
    "semantics=surgery (equation replacement); adjustment semantics "
    "(parent-stratified identity) is also available and can disagree "
    "under deterministic equations")

_USER_ERRORS = (ParseError, EnumerationLimitError, ZeroEvidenceError,
                ValueError)


def _bad_request(e: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(e))


def _load_psdd(vtree_text: str, psdd_text: str) -> Psdd:
    return parse_psdd(psdd_text, parse_vtree(vtree_text))


def _load_sem(sem_text: str) -> Sem:
    return parse_sem(sem_text)


class ValidateItem(BaseModel):
    kind: str = Field(description="one of: vtree, psdd, spn, sem")
    name: str = ""
    text: str
    vtree: str | None = Field(default=None,
                              description="vtree text, required for psdd")


class ValidateRequest(BaseModel):
    items: list[ValidateItem]
    tol: float = 1e-9


class ValidateResult(BaseModel):
    name: str
    ok: bool
    violations: list[str]


class ValidateResponse(BaseModel):
    results: list[ValidateResult]


@app.post("/validate", response_model=ValidateResponse)
def post_validate(req: ValidateRequest) -> ValidateResponse:
    results = []
    for item in req.items:
        try:
            if item.kind == "vtree":
                parse_vtree(item.text)
                violations: list[str] = []
            elif item.kind == "psdd":
                if item.vtree is None:
                    raise ValueError(
                        f"'{item.name}': a psdd needs its vtree")
                violations = validate(_load_psdd(item.vtree, item.text),
                                      tol=req.tol)
            elif item.kind == "spn":
                parse_spn(item.text)
                violations = []
            elif item.kind == "sem":
                parse_sem(item.text)
                violations = []
            else:
                raise ValueError(f"unknown model kind '{item.kind}'")
        except _USER_ERRORS as e:
            raise _bad_request(
                ValueError(f"{item.name or item.kind}: {e}")) from e
        results.append(ValidateResult(
            name=item.name or item.kind, ok=not violations,
            violations=violations))
    return ValidateResponse(results=results)


class QueryRequest(BaseModel):
    vtree: str
    psdd: str
    query: str = ""
    evidence: str = ""


class ProbabilityResponse(BaseModel):
    probability: float


@app.post("/query", response_model=ProbabilityResponse)
def post_query(req: QueryRequest) -> ProbabilityResponse:
    try:
        m = _load_psdd(req.vtree, req.psdd)
        query = parse_assignment(req.query, m.universe)
        evidence = parse_assignment(req.evidence, m.universe)
        if evidence:
            p = m.conditional(query, evidence)
        else:
            p = m.marginal(query)
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return ProbabilityResponse(probability=p)


class CompileRequest(BaseModel):
    vtree: str
    psdd: str


class CompileResponse(BaseModel):
    sem: str
    naming: str


@app.post("/compile", response_model=CompileResponse)
def post_compile(req: CompileRequest) -> CompileResponse:
    try:
        result = compile_psdd(_load_psdd(req.vtree, req.psdd))
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return CompileResponse(sem=serialize_sem(result.sem),
                           naming=naming_sidecar(result))


class DoRequest(BaseModel):
    sem: str
    do: str
    query: str = ""
    semantics: str = Field(default="surgery",
                           description="surgery or adjustment")


class DoResponse(BaseModel):
    probability: float
    semantics: str
    notice: str


@app.post("/do", response_model=DoResponse)
def post_do(req: DoRequest) -> DoResponse:
    try:
        m = _load_sem(req.sem)
        universe = m.exogenous + m.endogenous
        do = parse_assignment(req.do, universe)
        query = parse_assignment(req.query, universe)
        if req.semantics == "surgery":
            p = interventional_surgery_prob(m, query, do)
        elif req.semantics == "adjustment":
            p = interventional_adjustment_prob(m, query, do)
        else:
            raise ValueError(
                f"unknown semantics '{req.semantics}', expected "
                "'surgery' or 'adjustment'")
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return DoResponse(probability=p, semantics=req.semantics,
                      notice=SEMANTICS_NOTICE)


class CfRequest(BaseModel):
    sem: str
    do: str
    evidence: str = ""
    query: str = ""


@app.post("/cf", response_model=ProbabilityResponse)
def post_cf(req: CfRequest) -> ProbabilityResponse:
    try:
        m = _load_sem(req.sem)
        universe = m.exogenous + m.endogenous
        p = counterfactual(m,
                           parse_assignment(req.query, universe),
                           parse_assignment(req.do, universe),
                           parse_assignment(req.evidence, universe))
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return ProbabilityResponse(probability=p)


class DotRequest(BaseModel):
    kind: str = Field(description="sem or spn")
    text: str


class DotResponse(BaseModel):
    dot: str


@app.post("/dot", response_model=DotResponse)
def post_dot(req: DotRequest) -> DotResponse:
    try:
        if req.kind == "sem":
            dot = parse_sem(req.text).graph.to_dot()
        elif req.kind == "spn":
            dot = to_bn_topology(parse_spn(req.text)).to_causal_graph().to_dot()
        else:
            raise ValueError(f"cannot draw model kind '{req.kind}'")
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return DotResponse(dot=dot)


class SpnBnRequest(BaseModel):
    spn: str


class TrivialityCheck(BaseModel):
    subset: list[str]
    trivial: bool


class SpnBnResponse(BaseModel):
    latents: list[str]
    observables: list[str]
    edges: list[tuple[str, str]]
    dot: str
    checks: list[TrivialityCheck]
    all_trivial: bool


@app.post("/spn-bn", response_model=SpnBnResponse)
def post_spn_bn(req: SpnBnRequest) -> SpnBnResponse:
    import itertools

    try:
        s = parse_spn(req.spn)
        topology = to_bn_topology(s)
        if len(topology.observables) > 12:
            raise EnumerationLimitError(
                "refusing to enumerate intervention subsets over "
                f"{len(topology.observables)} observables (limit 12)")
        g = topology.to_causal_graph()
        names = [v.name for v in topology.observables]
        checks = []
        for r in range(1, len(names) + 1):
            for subset in itertools.combinations(names, r):
                checks.append(TrivialityCheck(
                    subset=list(subset),
                    trivial=verify_spn_triviality(g, subset)))
    except _USER_ERRORS as e:
        raise _bad_request(e) from e
    return SpnBnResponse(
        latents=list(topology.latents),
        observables=names,
        edges=list(topology.edges),
        dot=g.to_dot(),
        checks=checks,
        all_trivial=all(c.trivial for c in checks))


class ReproduceRequest(BaseModel):
    tol: float = 1e-9


class ReproduceCheck(BaseModel):
    name: str
    expected: float
    actual: float
    ok: bool


class ReproduceResponse(BaseModel):
    checks: list[ReproduceCheck]
    ok: bool


@app.post("/reproduce", response_model=ReproduceResponse)
def post_reproduce(req: ReproduceRequest) -> ReproduceResponse:
    checks = [ReproduceCheck(name=c.name, expected=c.expected,
                             actual=c.actual, ok=c.ok(req.tol))
              for c in courses.reproduce()]
    return ReproduceResponse(checks=checks, ok=all(c.ok for c in checks))
