"""Pair routing: move a share from the start point to one of two return
points, steered by the inputs both returns can see.

The share hops through every common past input point by teleportation.  An
agent at a hop cannot know which upstream pair actually carries the payload
(other hops may be spacelike separated), so a bank of pre-shared pairs is
kept per possible history of upstream input values, and the agent teleports
*every* incoming half onto the next bank, appending its local value to the
label.  At the final hop each half is forwarded to whichever return point the
delivery map names for its label; only the half whose label matches the true
inputs carries the payload.  All classical data (teleportation outcomes,
labels, local input values) is broadcast, and the delivery point applies the
accumulated Pauli corrections after checking every message it uses lies in
its causal past.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

from .geometry import Point, causally_precedes
from .statevec import Arena, BellOutcome
from .tasks import Assignment, SummoningTask, point_to_json


class CausalityViolation(RuntimeError):
    """A datum was consumed outside the future light cone of its emission."""


class Excluded(Enum):
    FIRST = "first"  # the pair's first return point is ruled out
    SECOND = "second"
    BOTH = "both"


class _OutcomeDependent:
    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "OUTCOME_DEPENDENT"


#: Sentinel a delivery map must never contain; the planner only produces
#: input-determined destinations, and the classical extractor refuses plans
#: carrying this marker.
OUTCOME_DEPENDENT = _OutcomeDependent()


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    point: Point
    kind: str
    data: dict
    broadcast: bool = False

    def to_json_dict(self) -> dict:
        return {
            "seq": self.seq,
            "point": point_to_json(self.point),
            "kind": self.kind,
            "data": self.data,
        }


class MessageStore:
    """Append-only event log with light-cone read semantics.

    Broadcast events are readable at a point only if emitted in its causal
    past; every consumption is audited and a violation raises immediately.
    """

    def __init__(self, tolerance: float = 0.0) -> None:
        self.tolerance = tolerance
        self.events: list[TraceEvent] = []
        self.consumptions: list[tuple[Point, int, bool]] = []

    def emit(
        self, at: Point, kind: str, data: dict, broadcast: bool = False
    ) -> TraceEvent:
        event = TraceEvent(len(self.events), at, kind, dict(data), broadcast)
        self.events.append(event)
        return event

    def broadcasts_at(self, at: Point) -> list[TraceEvent]:
        return [
            e
            for e in self.events
            if e.broadcast and causally_precedes(e.point, at, self.tolerance)
        ]

    def consume(self, consumer: Point, event: TraceEvent) -> dict:
        ok = causally_precedes(event.point, consumer, self.tolerance)
        self.consumptions.append((consumer, event.seq, ok))
        if not ok:
            raise CausalityViolation(
                f"event {event.seq} ({event.kind}) emitted at {event.point} "
                f"is outside the causal past of {consumer}"
            )
        return event.data

    @property
    def audit_ok(self) -> bool:
        return all(ok for _, _, ok in self.consumptions)


@dataclass(frozen=True)
class RoutingPlan:
    """Hop chain and delivery map for one pair of return points."""

    pair: tuple[int, int]
    start: Point
    hop_inputs: tuple[int, ...]  # ascending input indices = the common past set
    hop_points: tuple[Point, ...]
    hop_cards: tuple[int, ...]
    delivery: dict  # full restriction tuple -> return index, None, or sentinel
    target_points: dict  # return index -> Point

    def restriction_of(self, assignment: Sequence[int]) -> Assignment:
        return tuple(assignment[k] for k in self.hop_inputs)


@dataclass
class DeliveryRecord:
    pair: tuple[int, int]
    delivered_to: Optional[int]
    restriction: Assignment
    carrier_regs: tuple[int, ...]
    corrected: bool


def plan_pair_route(
    task: SummoningTask,
    i: int,
    j: int,
    exclusion: dict,
) -> RoutingPlan:
    """Build the hop chain for return pair (i, j) from an exclusion rule.

    ``exclusion`` maps every assignment of the pair's common past inputs to
    which of the two points it rules out; the share is delivered to the one
    that remains (or retained when both are ruled out).
    """
    if i == j:
        raise ValueError("pair must consist of two distinct return points")
    members = tuple(sorted(task.common_past_inputs(i, j)))
    if not members:
        raise ValueError(
            f"return pair ({i}, {j}) has no common past input point; "
            "no routing chain exists"
        )
    cards = tuple(task.cardinalities[k] for k in members)
    delivery: dict[Assignment, Optional[int]] = {}
    for r in itertools.product(*(range(n) for n in cards)):
        if r not in exclusion:
            raise ValueError(f"exclusion rule is missing restriction {r}")
        ruled_out = exclusion[r]
        if ruled_out is Excluded.FIRST:
            delivery[r] = j
        elif ruled_out is Excluded.SECOND:
            delivery[r] = i
        elif ruled_out is Excluded.BOTH:
            delivery[r] = None
        else:
            raise ValueError(f"unknown exclusion value {ruled_out!r}")
    targets = {i: task.returns[i], j: task.returns[j]}
    for q_idx, q in targets.items():
        if not causally_precedes(task.start, q):
            raise ValueError(f"start point cannot reach return point {q_idx}")
        for k in members:
            if not causally_precedes(task.inputs[k][0], q):
                raise ValueError(f"hop input {k} cannot reach return point {q_idx}")
    return RoutingPlan(
        (i, j),
        task.start,
        members,
        tuple(task.inputs[k][0] for k in members),
        cards,
        delivery,
        targets,
    )


def _bank_labels(cards: Sequence[int], length: int) -> list[Assignment]:
    return [tuple(v) for v in itertools.product(*(range(n) for n in cards[:length]))]


def execute_pair_route(
    plan: RoutingPlan,
    share_regs: Sequence[int],
    assignment: Sequence[int],
    arena: Arena,
    store: MessageStore,
) -> DeliveryRecord:
    """Run one pair route for a concrete assignment.

    The share registers are consumed; the returned record names the carrier
    registers at the delivery point (corrections already applied) or at the
    final hop when both returns were excluded.
    """
    pair_tag = [plan.pair[0] + 1, plan.pair[1] + 1]
    n_hops = len(plan.hop_inputs)
    share_dims = [arena.dimension_of(r) for r in share_regs]

    # pre-shared banks: banks[k][label][s] = (near half at hop k-1, far half at hop k)
    banks: list[dict[Assignment, list[tuple[int, int]]]] = [{}]
    for k in range(1, n_hops + 1):
        bank: dict[Assignment, list[tuple[int, int]]] = {}
        for label in _bank_labels(plan.hop_cards, k - 1):
            bank[label] = [arena.new_bell_pair(d) for d in share_dims]
        banks.append(bank)

    def emit_stage(at: Point, hop_field: Any, label, next_label, m_value, outcomes) -> None:
        data = {
            "pair": pair_tag,
            "hop": hop_field,
            "label": list(label),
            "next_label": list(next_label),
            "outcomes": [[o.a, o.b] for o in outcomes],
        }
        if m_value is not None:
            data["m"] = m_value
        store.emit(at, "teleport", data)
        store.emit(at, "broadcast", data, broadcast=True)

    # stage 0: teleport the share out of the start point
    outcomes = [
        arena.teleport(share_regs[s], banks[1][()][s]) for s in range(len(share_regs))
    ]
    emit_stage(plan.start, 0, (), (), None, outcomes)

    # intermediate hops teleport every incoming half onto the next bank
    for k in range(1, n_hops):
        at = plan.hop_points[k - 1]
        input_idx = plan.hop_inputs[k - 1]
        local = assignment[input_idx]
        for label in _bank_labels(plan.hop_cards, k - 1):
            next_label = label + (local,)
            outcomes = [
                arena.teleport(banks[k][label][s][1], banks[k + 1][next_label][s])
                for s in range(len(share_regs))
            ]
            emit_stage(at, input_idx + 1, label, next_label, local, outcomes)

    # final hop: forward every half according to the delivery map
    final_at = plan.hop_points[n_hops - 1]
    final_input = plan.hop_inputs[n_hops - 1]
    final_local = assignment[final_input]
    for label in _bank_labels(plan.hop_cards, n_hops - 1):
        restriction = label + (final_local,)
        dest = plan.delivery[restriction]
        if isinstance(dest, _OutcomeDependent):
            raise ValueError("delivery map contains an outcome-dependent entry")
        data = {
            "pair": pair_tag,
            "hop": final_input + 1,
            "label": list(label),
            "m": final_local,
            "sent_to": None if dest is None else dest + 1,
        }
        store.emit(final_at, "broadcast", data, broadcast=True)
        if dest is not None:
            target = plan.target_points[dest]
            if not causally_precedes(final_at, target, store.tolerance):
                raise CausalityViolation(
                    f"final hop at {final_at} cannot forward a register to {target}"
                )
            store.emit(
                target,
                "deliver",
                {"pair": pair_tag, "label": list(label), "to": dest + 1},
            )
        else:
            store.emit(
                final_at,
                "deliver",
                {"pair": pair_tag, "label": list(label), "to": None},
            )

    # identify the true payload path and correct it at the delivery point,
    # using only broadcast data readable there
    true_restriction = plan.restriction_of(assignment)
    dest = plan.delivery[true_restriction]
    carriers = tuple(banks[n_hops][true_restriction[:-1]][s][1] for s in range(len(share_regs)))
    if dest is None:
        return DeliveryRecord(plan.pair, None, true_restriction, carriers, False)

    target = plan.target_points[dest]
    route_msgs = [
        e
        for e in store.events
        if e.broadcast and e.data.get("pair") == pair_tag
    ]

    def find_message(hop_field: Any, label: Assignment) -> TraceEvent:
        for e in route_msgs:
            if e.data["hop"] == hop_field and tuple(e.data["label"]) == label:
                return e
        raise CausalityViolation(
            f"no broadcast for hop {hop_field} label {label} reached {target}"
        )

    # the delivery agent learns the true label history from the broadcast
    # local input values, hop by hop
    history: list[int] = []
    stage_outcomes: list[list[BellOutcome]] = []
    first = store.consume(target, find_message(0, ()))
    stage_outcomes.append([BellOutcome(a, b) for a, b in first["outcomes"]])
    for k in range(1, n_hops):
        msg = find_message(plan.hop_inputs[k - 1] + 1, tuple(history))
        data = store.consume(target, msg)
        history.append(data["m"])
        stage_outcomes.append([BellOutcome(a, b) for a, b in data["outcomes"]])
    final_msg = find_message(plan.hop_inputs[-1] + 1, tuple(history))
    store.consume(target, final_msg)

    for outcomes in reversed(stage_outcomes):
        for s, outcome in enumerate(outcomes):
            arena.apply_correction(carriers[s], outcome)
    return DeliveryRecord(plan.pair, dest, true_restriction, carriers, True)
