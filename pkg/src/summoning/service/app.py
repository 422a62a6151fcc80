"""HTTP surface over the core package.

Every endpoint is stateless: the task travels in the request body and the
full report comes back in the response, so results are reproducible from
(request, seed) alone.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..classical import run_classical_token, simulate_classically
from ..feasibility import classically_possible
from ..protocol import (
    SynthesisRefused,
    run,
    run_exhaustive,
    synthesize,
)
from ..secret_sharing import UnsupportedSchemeError
from ..scenarios import generate
from ..tasks import (
    SummoningTask,
    allowed_assignments,
    classify_variant,
    task_from_json_dict,
    task_to_json_dict,
    validate,
)
from .schemas import (
    CheckRequest,
    CheckResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
    ScreenModel,
    SynthesizeRequest,
    SynthesizeResponse,
    TaskModel,
    ValidateRequest,
    ValidateResponse,
)


def _load_task(model: TaskModel) -> SummoningTask:
    try:
        return task_from_json_dict(model.model_dump(exclude_none=True))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _refuse(kind: str, reason: str, witness=None) -> HTTPException:
    return HTTPException(
        status_code=409,
        detail={"kind": kind, "reason": reason, "witness": witness},
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="summoning",
        version=__version__,
        description=(
            "Feasibility checks, protocol synthesis, and exact simulation of "
            "relativistic state-delivery tasks"
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/tasks/validate", response_model=ValidateResponse)
    def validate_task(req: ValidateRequest) -> ValidateResponse:
        task = _load_task(req.task)
        report = validate(task)
        return ValidateResponse(valid=report.valid, violations=list(report.violations))

    @app.post("/tasks/check", response_model=CheckResponse)
    def check_task(req: CheckRequest) -> CheckResponse:
        task = _load_task(req.task)
        report = validate(task)
        if not report.valid:
            return CheckResponse(valid=False, violations=list(report.violations))
        variant, regime = classify_variant(task)
        verdict = classically_possible(task)
        return CheckResponse(
            valid=True,
            violations=[],
            variant=variant.value,
            regime=regime.value,
            possible=verdict.possible,
            reason=verdict.reason,
            screens=[ScreenModel(**s.to_json_dict()) for s in verdict.screens],
            witness=_jsonable(verdict.witness),
        )

    @app.post("/tasks/generate", response_model=GenerateResponse)
    def generate_task(req: GenerateRequest) -> GenerateResponse:
        try:
            task = generate(req.scenario, seed=req.seed, **req.params)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from exc
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return GenerateResponse(scenario=req.scenario, task=task_to_json_dict(task))

    @app.post("/protocol/synthesize", response_model=SynthesizeResponse)
    def synthesize_task(req: SynthesizeRequest) -> SynthesizeResponse:
        task = _load_task(req.task)
        plan = _synthesize_or_refuse(task, req.secret_dim)
        return SynthesizeResponse(plan=plan.summary_dict())

    @app.post("/protocol/run", response_model=RunResponse)
    def run_task(req: RunRequest) -> RunResponse:
        task = _load_task(req.task)
        report = validate(task)
        if not report.valid:
            raise HTTPException(status_code=422, detail=report.violations[0])
        if req.mode == "classical_token":
            return _run_classical_token(task, req)
        plan = _synthesize_or_refuse(task, req.secret_dim)
        if req.mode == "classical_simulate":
            return _run_classical_simulate(task, plan, req)
        return _run_quantum(task, plan, req)

    return app


def _jsonable(value):
    if isinstance(value, (tuple, list, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(v) for v in items]
    return value


def _synthesize_or_refuse(task: SummoningTask, secret_dim: int):
    try:
        return synthesize(task, secret_dim=secret_dim)
    except SynthesisRefused as exc:
        raise _refuse("refused", exc.reason, _jsonable(exc.witness)) from exc
    except UnsupportedSchemeError as exc:
        raise _refuse("unsupported", str(exc)) from exc


def _assignments_for(task: SummoningTask, req: RunRequest) -> list[tuple[int, ...]]:
    if req.exhaustive:
        return allowed_assignments(task)
    if req.assignment is None:
        raise HTTPException(
            status_code=422, detail="provide an assignment or set exhaustive=true"
        )
    m = tuple(req.assignment)
    if len(m) != task.num_inputs or any(
        not 0 <= v < n for v, n in zip(m, task.cardinalities)
    ):
        raise HTTPException(status_code=422, detail=f"assignment {m} out of range")
    if not task.is_allowed(m):
        raise HTTPException(status_code=422, detail=f"assignment {m} is forbidden")
    return [m]


def _run_quantum(task: SummoningTask, plan, req: RunRequest) -> RunResponse:
    if req.exhaustive:
        rep = run_exhaustive(task, plan, req.seed, jobs=req.jobs)
        rows = [r.to_json_dict(req.include_trace) for r in rep.rows]
        return RunResponse(
            mode="quantum",
            plan=plan.summary_dict(),
            rows=rows,
            min_fidelity=rep.min_fidelity,
            mismatches=rep.mismatches,
            audit_ok=rep.audit_ok,
        )
    (m,) = _assignments_for(task, req)
    outcome = run(task, plan, m, seed=[req.seed, 0])
    return RunResponse(
        mode="quantum",
        plan=plan.summary_dict(),
        rows=[outcome.to_json_dict(req.include_trace)],
        min_fidelity=outcome.fidelity,
        mismatches=int(outcome.returned_at != outcome.designated),
        audit_ok=outcome.audit_ok,
    )


def _run_classical_token(task: SummoningTask, req: RunRequest) -> RunResponse:
    verdict = classically_possible(task)
    if not verdict.possible:
        raise _refuse(
            "refused",
            f"not classically possible: {verdict.reason}",
            _jsonable(verdict.witness),
        )
    rows = []
    mismatches = 0
    audit_ok = True
    for m in _assignments_for(task, req):
        out = run_classical_token(task, verdict.rules, m)
        expected = task.designated(m)
        if expected:
            match = len(out.delivery_sites) == 1 and out.delivery_sites[0] in expected
        else:
            match = not out.delivery_sites
        mismatches += 0 if match else 1
        audit_ok = audit_ok and out.audit_ok
        row = out.to_json_dict()
        if req.include_trace:
            row["trace"] = [e.to_json_dict() for e in out.events]
        rows.append(row)
    return RunResponse(
        mode="classical_token",
        plan=None,
        rows=rows,
        min_fidelity=None,
        mismatches=mismatches,
        audit_ok=audit_ok,
    )


def _run_classical_simulate(task: SummoningTask, plan, req: RunRequest) -> RunResponse:
    rows = []
    mismatches = 0
    audit_ok = True
    for m in _assignments_for(task, req):
        out = simulate_classically(task, plan, m)
        expected = plan.task.designated(m)
        sites = set(out.delivery_sites)
        match = sites == set(expected)
        mismatches += 0 if match else 1
        audit_ok = audit_ok and out.audit_ok
        row = out.to_json_dict()
        if req.include_trace:
            row["trace"] = [e.to_json_dict() for e in out.events]
        rows.append(row)
    return RunResponse(
        mode="classical_simulate",
        plan=plan.summary_dict(),
        rows=rows,
        min_fidelity=None,
        mismatches=mismatches,
        audit_ok=audit_ok,
    )


app = create_app()
