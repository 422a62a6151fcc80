"""Classical summoning and the broadcast simulation of quantum plans.

A classical state is copyable: its description is broadcast from the start
point and a copy is handed over wherever the local decision rule fires.

A quantum plan whose delivery decisions depend only on the inputs (ours do;
measurement outcomes never steer where the payload goes) can itself be
described classically: every operation it would perform is a classical
record tagged with its spacetime point and the records it needs.
Broadcasting those records lets the agent at the valid return point deduce
that the quantum protocol would have returned the state there, and everyone
else deduce that it would not.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .feasibility import LocalDecisionRule
from .geometry import Point, causally_precedes
from .routing import (
    CausalityViolation,
    MessageStore,
    RoutingPlan,
    TraceEvent,
    _OutcomeDependent,
)
from .tasks import Assignment, SummoningTask, point_to_json


class NotDeterministicError(ValueError):
    """The plan's delivery decisions are not a function of the inputs alone."""


@dataclass
class ClassicalOutcome:
    assignment: Assignment
    delivery_sites: tuple[int, ...]  # return indices where a copy was handed over
    audit_ok: bool
    events: list[TraceEvent]

    def to_json_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "delivery_sites": [j + 1 for j in self.delivery_sites],
            "audit_ok": self.audit_ok,
        }


def run_classical_token(
    task: SummoningTask,
    rules: Sequence[LocalDecisionRule],
    assignment: Sequence[int],
    description: bytes = b"classical-state",
) -> ClassicalOutcome:
    """Broadcast the token description and replay the local rules at every
    return point, handing over a copy exactly where a rule fires."""
    assignment = tuple(assignment)
    if not task.is_allowed(assignment):
        raise ValueError(f"assignment {assignment} is forbidden")
    store = MessageStore()
    token_msg = store.emit(
        task.start,
        "broadcast",
        {"op": "token_description", "bytes": description.hex()},
        broadcast=True,
    )
    input_msgs = {}
    for k, (p, _) in enumerate(task.inputs):
        input_msgs[k] = store.emit(
            p, "broadcast", {"input": k + 1, "value": assignment[k]}, broadcast=True
        )
    sites: list[int] = []
    for rule in rules:
        at = task.returns[rule.return_index]
        values = tuple(
            store.consume(at, input_msgs[k])["value"] for k in rule.members
        )
        if values not in rule.table:
            raise ValueError(
                f"rule for return point {rule.return_index} has no entry for {values}"
            )
        if rule.table[values]:
            copy = bytes.fromhex(store.consume(at, token_msg)["bytes"])
            store.emit(
                at,
                "deliver",
                {"return": rule.return_index + 1, "bytes": copy.hex()},
            )
            sites.append(rule.return_index)
    return ClassicalOutcome(assignment, tuple(sites), store.audit_ok, store.events)


@dataclass(frozen=True)
class OperationDescriptor:
    """Classical description of one operation of a quantum plan."""

    index: int
    site: Point
    kind: str  # prepare_state | apply_unitary | measure | broadcast | deliver
    params: dict
    depends_on: tuple[int, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "site": point_to_json(self.site),
            "kind": self.kind,
            "params": self.params,
            "depends_on": list(self.depends_on),
        }


class _TraceBuilder:
    def __init__(self) -> None:
        self.ops: list[OperationDescriptor] = []

    def add(self, site: Point, kind: str, params: dict, depends_on=()) -> int:
        op = OperationDescriptor(
            len(self.ops), site, kind, dict(params), tuple(depends_on)
        )
        self.ops.append(op)
        return op.index


def _bank_labels(cards: Sequence[int], length: int):
    return [tuple(v) for v in itertools.product(*(range(n) for n in cards[:length]))]


def _route_descriptors(
    tb: _TraceBuilder,
    rplan: RoutingPlan,
    assignment: Sequence[int],
    input_ops: dict[int, int],
    encode_op: int,
) -> tuple[dict[Assignment, int], Optional[int], dict]:
    """Descriptors for one pair route; returns (measure op per stage label,
    the deliver op index of the true carrier or None, and the stage ops of
    the true path)."""
    pair_tag = [rplan.pair[0] + 1, rplan.pair[1] + 1]
    n_hops = len(rplan.hop_inputs)
    measure_ops: dict[tuple, int] = {}

    op0 = tb.add(
        rplan.start,
        "measure",
        {
            "pair": pair_tag,
            "hop": 0,
            "label": [],
            "outcome": "symbolic",
        },
        depends_on=(encode_op,),
    )
    measure_ops[(0, ())] = op0
    tb.add(
        rplan.start,
        "broadcast",
        {"pair": pair_tag, "hop": 0, "label": []},
        depends_on=(op0,),
    )

    for k in range(1, n_hops):
        idx = rplan.hop_inputs[k - 1]
        at = rplan.hop_points[k - 1]
        local = assignment[idx]
        for label in _bank_labels(rplan.hop_cards, k - 1):
            # both halves the agent touches are local (predistributed), so a
            # hop never waits on other hops; only its own input is needed
            op = tb.add(
                at,
                "measure",
                {
                    "pair": pair_tag,
                    "hop": idx + 1,
                    "label": list(label),
                    "next_label": list(label + (local,)),
                    "outcome": "symbolic",
                },
                depends_on=(input_ops[idx],),
            )
            measure_ops[(k, label)] = op
            tb.add(
                at,
                "broadcast",
                {"pair": pair_tag, "hop": idx + 1, "label": list(label), "m": local},
                depends_on=(op,),
            )

    final_idx = rplan.hop_inputs[-1]
    final_at = rplan.hop_points[-1]
    final_local = assignment[final_idx]
    true_prefix = tuple(assignment[k] for k in rplan.hop_inputs[:-1])
    carrier_deliver: Optional[int] = None
    deliver_ops: dict[Assignment, int] = {}
    for label in _bank_labels(rplan.hop_cards, n_hops - 1):
        restriction = label + (final_local,)
        dest = rplan.delivery[restriction]
        if isinstance(dest, _OutcomeDependent):
            raise NotDeterministicError(
                f"pair {tuple(rplan.pair)} delivery for inputs {restriction} "
                "depends on a measurement outcome"
            )
        op = tb.add(
            final_at,
            "deliver",
            {
                "pair": pair_tag,
                "label": list(label),
                "to": None if dest is None else dest + 1,
            },
            depends_on=(input_ops[final_idx],),
        )
        deliver_ops[restriction] = op
        if label == true_prefix:
            carrier_deliver = op

    true_stage_ops = {
        "stages": [measure_ops[(0, ())]]
        + [
            measure_ops[(k, true_prefix[: k - 1])]
            for k in range(1, n_hops)
        ],
        "deliver": carrier_deliver,
    }
    return deliver_ops, carrier_deliver, true_stage_ops


def extract_deterministic_trace(plan, assignment: Sequence[int]) -> list[OperationDescriptor]:
    """Classical description of every operation the plan performs for one
    assignment.  Measurement outcomes appear symbolically: the decision of
    where everything goes never reads them.

    Raises :class:`NotDeterministicError` when a delivery entry is marked
    outcome-dependent.
    """
    assignment = tuple(assignment)
    task = plan.task
    tb = _TraceBuilder()
    prepare_op = tb.add(task.start, "prepare_state", {"op": "receive_state"})
    input_ops = {
        k: tb.add(p, "broadcast", {"input": k + 1, "value": assignment[k]})
        for k, (p, _) in enumerate(task.inputs)
    }

    if task.num_returns == 1:
        rule = plan.verdict.rules[0]
        transport = tb.add(
            task.returns[0],
            "deliver",
            {"pair": None, "label": [], "to": 1},
            depends_on=(prepare_op,),
        )
        if rule.table[tuple(assignment[k] for k in rule.members)]:
            deps = (transport,) + tuple(input_ops[k] for k in rule.members)
            tb.add(
                task.returns[0],
                "deliver",
                {"op": "return_state", "return": 1},
                depends_on=deps,
            )
        return tb.ops

    encode_op = tb.add(
        task.start,
        "apply_unitary",
        {"op": "encode", "construction": plan.scheme.construction},
        depends_on=(prepare_op,),
    )
    route_info = {}
    for pair in sorted(plan.pair_plans):
        route_info[pair] = _route_descriptors(
            tb, plan.pair_plans[pair], assignment, input_ops, encode_op
        )

    for k in range(task.num_returns):
        rule = plan.verdict.rules[k]
        values = tuple(assignment[i] for i in rule.members)
        if not rule.table[values]:
            continue
        at = task.returns[k]
        star = [pair for pair in plan.pair_plans if k in pair]
        deps: list[int] = [input_ops[i] for i in rule.members]
        for pair in star:
            _, carrier, stages = route_info[pair]
            deps.extend(stages["stages"])
            if carrier is not None:
                deps.append(carrier)
        fix = tb.add(
            at,
            "apply_unitary",
            {"op": "correct_and_reconstruct", "return": k + 1},
            depends_on=tuple(deps),
        )
        tb.add(
            at,
            "deliver",
            {"op": "return_state", "return": k + 1},
            depends_on=(fix,) + tuple(input_ops[i] for i in rule.members),
        )
    return tb.ops


def simulate_classically(
    task: SummoningTask, plan, assignment: Sequence[int]
) -> ClassicalOutcome:
    """Replay the plan's classical description as broadcasts and let each
    return point deduce whether the quantum protocol would return there."""
    assignment = tuple(assignment)
    if not task.is_allowed(assignment):
        raise ValueError(f"assignment {assignment} is forbidden")
    ops = extract_deterministic_trace(plan, assignment)
    store = MessageStore()
    emitted = [
        store.emit(op.site, "broadcast", op.to_json_dict(), broadcast=True)
        for op in ops
    ]

    sites: list[int] = []
    for k, at in enumerate(plan.task.returns):
        for op in ops:
            if op.kind != "deliver" or op.params.get("op") != "return_state":
                continue
            if op.params["return"] != k + 1:
                continue
            if op.site != at:
                raise CausalityViolation(
                    f"return operation for point {k} sits at {op.site}, not {at}"
                )
            # the deduction may use only records in the agent's causal past;
            # consume the transitive closure of what the operation needs
            needed = set(op.depends_on)
            frontier = list(op.depends_on)
            while frontier:
                dep = frontier.pop()
                for d in ops[dep].depends_on:
                    if d not in needed:
                        needed.add(d)
                        frontier.append(d)
            for dep in sorted(needed):
                store.consume(at, emitted[dep])
            store.emit(at, "deliver", {"return": k + 1, "op": "token_copy"})
            sites.append(k)
    return ClassicalOutcome(assignment, tuple(sites), store.audit_ok, store.events)
