"""End-to-end pipeline: share the unknown state over return-point pairs,
route every share, and reconstruct at the designated return point.

``synthesize`` turns a classically possible unconstrained task into a plan
(after rewriting multiple-return maps to a single selection), ``run``
executes the plan for one assignment against the exact simulator, and
``run_exhaustive`` sweeps every assignment.  The reference copy of the secret
never enters the planning or execution path; only the harness wrapper in
``run`` sees it, for the final fidelity check.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .feasibility import (
    FeasibilityVerdict,
    classically_possible,
    determinize,
    restrict,
)
from .geometry import causally_precedes
from .routing import (
    CausalityViolation,
    Excluded,
    MessageStore,
    RoutingPlan,
    TraceEvent,
    execute_pair_route,
    plan_pair_route,
)
from .secret_sharing import (
    UnsupportedSchemeError,
    encode_star,
    reconstruct_from,
)
from .statevec import Arena
from .tasks import (
    Assignment,
    InputRegime,
    ReturnVariant,
    SummoningTask,
    allowed_assignments,
    iter_assignments,
    validate,
)


class ProtocolError(RuntimeError):
    pass


class SynthesisRefused(Exception):
    """The task admits no quantum plan; carries the reason and evidence."""

    def __init__(self, reason: str, witness=None, verdict: Optional[FeasibilityVerdict] = None):
        super().__init__(reason)
        self.reason = reason
        self.witness = witness
        self.verdict = verdict


@dataclass(frozen=True)
class SchemeDescriptor:
    n_points: int
    secret_dim: int
    share_dim: int
    construction: str

    def to_json_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "secret_dim": self.secret_dim,
            "share_dim": self.share_dim,
            "construction": self.construction,
        }


@dataclass(frozen=True)
class ProtocolPlan:
    task: SummoningTask  # the task the plan executes (post-rewrite)
    verdict: FeasibilityVerdict
    scheme: SchemeDescriptor
    pair_plans: dict  # (i, j) -> RoutingPlan
    rewritten_from_multiple: bool = False

    def summary_dict(self) -> dict:
        return {
            "scheme": self.scheme.to_json_dict(),
            "pairs": [
                {
                    "pair": [i + 1, j + 1],
                    "hops": [k + 1 for k in self.pair_plans[(i, j)].hop_inputs],
                }
                for (i, j) in sorted(self.pair_plans)
            ],
            "returns": self.task.num_returns,
            "rewritten_from_multiple": self.rewritten_from_multiple,
        }


@dataclass
class RunOutcome:
    assignment: Assignment
    designated: Optional[int]
    returned_at: Optional[int]
    fidelity: Optional[float]
    trace: list[TraceEvent]
    audit_ok: bool

    def to_json_dict(self, include_trace: bool = False) -> dict:
        out = {
            "assignment": list(self.assignment),
            "designated": None if self.designated is None else self.designated + 1,
            "returned_at": None if self.returned_at is None else self.returned_at + 1,
            "fidelity": self.fidelity,
            "audit_ok": self.audit_ok,
        }
        if include_trace:
            out["trace"] = [e.to_json_dict() for e in self.trace]
        return out


@dataclass
class ExhaustiveReport:
    rows: list[RunOutcome]
    min_fidelity: Optional[float]
    mismatches: int
    audit_ok: bool

    def to_json_dict(self, include_trace: bool = False) -> dict:
        return {
            "rows": [r.to_json_dict(include_trace) for r in self.rows],
            "min_fidelity": self.min_fidelity,
            "mismatches": self.mismatches,
            "audit_ok": self.audit_ok,
        }


def derive_exclusion_rule(task: SummoningTask, i: int, j: int) -> dict:
    """For each assignment of the pair's common past inputs, decide which of
    the two return points the full map can never designate under any
    extension.  For possible unconstrained tasks at least one is excluded."""
    members = tuple(sorted(task.common_past_inputs(i, j)))
    cards = task.cardinalities
    rule: dict[Assignment, Excluded] = {}
    reach_i: set[Assignment] = set()
    reach_j: set[Assignment] = set()
    for m in iter_assignments(cards):
        r = restrict(m, members)
        targets = task.designated(m)
        if i in targets:
            reach_i.add(r)
        if j in targets:
            reach_j.add(r)
    for r in itertools.product(*(range(cards[k]) for k in members)):
        can_i, can_j = r in reach_i, r in reach_j
        if can_i and can_j:
            raise ProtocolError(
                f"inputs {r} on the common past of returns ({i}, {j}) exclude "
                "neither; the task cannot be classically possible"
            )
        if not can_i and not can_j:
            rule[r] = Excluded.BOTH
        elif can_i:
            rule[r] = Excluded.SECOND  # j is ruled out, share goes to i
        else:
            rule[r] = Excluded.FIRST
    return rule


def synthesize(
    task: SummoningTask,
    verdict: Optional[FeasibilityVerdict] = None,
    secret_dim: int = 3,
) -> ProtocolPlan:
    """Build the share-and-route plan for a classically possible,
    unconstrained task; refuse anything else with the evidence."""
    report = validate(task)
    if not report.valid:
        raise ValueError(f"task is invalid: {report.violations[0]}")
    if verdict is None:
        verdict = classically_possible(task)
    if verdict.regime is InputRegime.CONSTRAINED:
        screen = verdict.screen("common_past_nonempty")
        detail = ""
        if screen is not None and not screen.passed:
            pairs = [
                f"({a + 1}, {b + 1})" for a, b in screen.witness
            ]
            detail = (
                "; return pairs "
                + ", ".join(pairs)
                + " also share no common past input point"
            )
        raise SynthesisRefused(
            "constrained inputs: the pairwise exclusion guarantee only holds "
            "for unconstrained tasks" + detail,
            verdict=verdict,
        )
    if not verdict.possible:
        raise SynthesisRefused(
            f"not classically possible: {verdict.reason}",
            witness=verdict.witness,
            verdict=verdict,
        )
    rewritten = False
    if verdict.variant is ReturnVariant.MULTIPLE:
        task = determinize(task, verdict)
        verdict = classically_possible(task)
        if not verdict.possible:
            raise ProtocolError("selection rewrite produced an impossible task")
        rewritten = True
    n = task.num_returns
    if n > 3:
        raise UnsupportedSchemeError(
            f"no verified share construction for {n} return points"
        )
    share_dim = secret_dim if n <= 2 else 3
    construction = {1: "direct", 2: "identity", 3: "pair_threshold_2of3"}[n]
    pair_plans = {}
    for i, j in itertools.combinations(range(n), 2):
        rule = derive_exclusion_rule(task, i, j)
        pair_plans[(i, j)] = plan_pair_route(task, i, j, rule)
    scheme = SchemeDescriptor(n, secret_dim, share_dim, construction)
    return ProtocolPlan(task, verdict, scheme, pair_plans, rewritten)


def _read_inputs_at(
    store: MessageStore, at, members: Sequence[int]
) -> Assignment:
    """Recover the named input values from broadcasts readable at a point."""
    values = []
    for k in members:
        event = next(
            (
                e
                for e in store.events
                if e.broadcast and e.kind == "broadcast" and e.data.get("input") == k + 1
            ),
            None,
        )
        if event is None:
            raise ProtocolError(f"input {k} was never broadcast")
        values.append(store.consume(at, event)["value"])
    return tuple(values)


def _execute_plan(
    plan: ProtocolPlan,
    assignment: Assignment,
    arena: Arena,
    secret_reg: int,
    store: MessageStore,
) -> tuple[Optional[int], Optional[int]]:
    """Alice's side: no access to the reference amplitudes."""
    task = plan.task
    for k, (p, _) in enumerate(task.inputs):
        store.emit(p, "broadcast", {"input": k + 1, "value": assignment[k]}, broadcast=True)

    n = task.num_returns
    if n == 1:
        # single candidate point: carry the state there, return it if the
        # local rule fires
        target = task.returns[0]
        if not causally_precedes(task.start, target, store.tolerance):
            raise CausalityViolation(
                f"cannot transport the state from {task.start} to {target}"
            )
        store.emit(target, "deliver", {"pair": None, "label": [], "to": 1})
        rule = plan.verdict.rules[0]
        values = _read_inputs_at(store, target, rule.members)
        if rule.table[values]:
            store.emit(target, "reconstruct", {"return": 1, "using": []})
            return 0, secret_reg
        return None, None

    bundle = encode_star(arena, secret_reg, n)
    store.emit(
        task.start,
        "prepare",
        {
            "op": "encode",
            "construction": bundle.construction,
            "shares": [[a + 1, b + 1] for a, b in sorted(bundle.registers)],
        },
    )
    records = {}
    for pair in sorted(plan.pair_plans):
        records[pair] = execute_pair_route(
            plan.pair_plans[pair], bundle.registers[pair], assignment, arena, store
        )

    returned_at: Optional[int] = None
    out_reg: Optional[int] = None
    for k in range(n):
        rule = plan.verdict.rules[k]
        values = _read_inputs_at(store, task.returns[k], rule.members)
        if not rule.table[values]:
            continue
        if returned_at is not None:
            raise ProtocolError(
                f"rules fired at both return points {returned_at} and {k}"
            )
        star = [pair for pair in records if k in pair]
        missing = [pair for pair in star if records[pair].delivered_to != k]
        if missing:
            raise ProtocolError(
                f"return point {k} fired but shares {missing} were not delivered there"
            )
        share_regs = {pair: records[pair].carrier_regs for pair in star}
        out_reg = reconstruct_from(arena, share_regs, n, k, plan.scheme.secret_dim)
        store.emit(
            task.returns[k],
            "reconstruct",
            {"return": k + 1, "using": [[a + 1, b + 1] for a, b in sorted(star)]},
        )
        returned_at = k
    return returned_at, out_reg


def run(
    task: SummoningTask,
    plan: ProtocolPlan,
    assignment: Sequence[int],
    seed,
) -> RunOutcome:
    """Execute the plan for one assignment with a fresh random secret.

    The reference amplitudes exist only in this harness; the designated
    return point is read from the plan's task map for the mismatch check.
    """
    assignment = tuple(assignment)
    if not plan.task.is_allowed(assignment):
        raise ValueError(f"assignment {assignment} is forbidden")
    rng = np.random.default_rng(seed)
    d = plan.scheme.secret_dim
    amps = rng.normal(size=d) + 1j * rng.normal(size=d)
    amps = amps / np.linalg.norm(amps)

    arena = Arena(rng)
    store = MessageStore()
    store.emit(plan.task.start, "prepare", {"op": "receive_state", "dim": d})
    secret_reg = arena.new_register(d, amps)
    returned_at, out_reg = _execute_plan(plan, assignment, arena, secret_reg, store)

    designated_set = plan.task.designated(assignment)
    designated = min(designated_set) if designated_set else None
    fidelity = None
    if returned_at is not None:
        if out_reg is None:
            raise ProtocolError("return event without an output register")
        fidelity = arena.register_fidelity(out_reg, amps)
    return RunOutcome(
        assignment, designated, returned_at, fidelity, store.events, store.audit_ok
    )


def run_exhaustive(
    task: SummoningTask,
    plan: ProtocolPlan,
    seed: int,
    jobs: Optional[int] = None,
) -> ExhaustiveReport:
    """One run per allowed assignment, in lexicographic order.

    Every row derives its generator from (seed, row index), so the table is
    reproducible and independent of the level of parallelism.
    """
    rows_in = list(enumerate(allowed_assignments(plan.task)))

    def one(item: tuple[int, Assignment]) -> RunOutcome:
        idx, m = item
        return run(task, plan, m, seed=[seed, idx])

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, rows_in))
    else:
        rows = [one(item) for item in rows_in]
    fidelities = [r.fidelity for r in rows if r.fidelity is not None]
    mismatches = sum(1 for r in rows if r.returned_at != r.designated)
    return ExhaustiveReport(
        rows,
        min(fidelities) if fidelities else None,
        mismatches,
        all(r.audit_ok for r in rows),
    )


def trace_to_json_lines(events: Sequence[TraceEvent]) -> str:
    return "\n".join(json.dumps(e.to_json_dict()) for e in events) + "\n"
