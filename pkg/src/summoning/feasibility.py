"""Classical possibility of summoning tasks.

A task is classically possible when a copyable description, broadcast from
the start point, lets the agent at each return point decide locally (from the
inputs in its causal past) whether to hand over a copy, such that exactly one
valid return point fires whenever the map designates any, and none fires
otherwise.  The decision criterion implemented here: the indicator of each
return point must factor through the inputs in that point's causal past, and
every designated return point must lie in the causal future of the start.

Multiple-return tasks are decided by searching for a selection function
(one designated point per assignment) whose indicators factor the same way;
``determinize`` then rewrites the task with that selection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .geometry import causally_precedes
from .tasks import (
    Assignment,
    InputRegime,
    ReturnVariant,
    SummoningTask,
    allowed_assignments,
    classify_variant,
    iter_assignments,
    validate,
)

SCREEN_START_REACHES_RETURNS = "start_reaches_returns"
SCREEN_COMMON_PAST_NONEMPTY = "common_past_nonempty"
SCREEN_PAIRWISE_EXCLUSION = "pairwise_exclusion"


@dataclass(frozen=True)
class ScreenResult:
    name: str
    passed: bool
    witness: tuple = ()
    informational: bool = False

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "witness": _jsonable(self.witness),
            "informational": self.informational,
        }


def _jsonable(value):
    if isinstance(value, (tuple, list, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(v) for v in items]
    return value


@dataclass(frozen=True)
class LocalDecisionRule:
    """Return/stay-silent decision at one return point, read off the inputs
    in its causal past."""

    return_index: int
    members: tuple[int, ...]  # sorted input indices the rule may read
    table: dict  # restriction tuple -> bool (fire)

    def restriction_of(self, assignment: Sequence[int]) -> Assignment:
        return tuple(assignment[k] for k in self.members)

    def fires(self, assignment: Sequence[int]) -> bool:
        return self.table[self.restriction_of(assignment)]


@dataclass(frozen=True)
class FeasibilityVerdict:
    possible: bool
    variant: ReturnVariant
    regime: InputRegime
    screens: tuple[ScreenResult, ...]
    rules: Optional[tuple[LocalDecisionRule, ...]] = None
    selection: Optional[dict] = None  # assignment -> return index or None
    witness: Optional[tuple] = None
    reason: str = ""

    def screen(self, name: str) -> Optional[ScreenResult]:
        for s in self.screens:
            if s.name == name:
                return s
        return None


def restrict(assignment: Sequence[int], members: Iterable[int]) -> Assignment:
    return tuple(assignment[k] for k in members)


def check_start_reaches_returns(task: SummoningTask) -> ScreenResult:
    """Every return point must lie in the closed causal future of the start."""
    failing = tuple(
        j
        for j, q in enumerate(task.returns)
        if not causally_precedes(task.start, q)
    )
    return ScreenResult(SCREEN_START_REACHES_RETURNS, not failing, failing)


def check_common_past_nonempty(task: SummoningTask) -> ScreenResult:
    """Every pair of return points must share at least one past input point."""
    empty_pairs = tuple(
        (i, j)
        for i, j in itertools.combinations(range(task.num_returns), 2)
        if not task.common_past_inputs(i, j)
    )
    return ScreenResult(SCREEN_COMMON_PAST_NONEMPTY, not empty_pairs, empty_pairs)


def check_pairwise_exclusion(task: SummoningTask) -> ScreenResult:
    """For each return pair, every assignment of their common past inputs must
    rule out at least one of the two as the designated return point.

    Defined only for unconstrained tasks whose map never designates more than
    one point.
    """
    if task.forbidden:
        raise ValueError("pairwise exclusion screen is undefined for constrained tasks")
    variant, _ = classify_variant(task)
    if variant is ReturnVariant.MULTIPLE:
        raise ValueError(
            "pairwise exclusion screen is undefined for multiple-return maps"
        )
    cards = task.cardinalities
    for i, j in itertools.combinations(range(task.num_returns), 2):
        members = tuple(sorted(task.common_past_inputs(i, j)))
        extends_i: set[Assignment] = set()
        extends_j: set[Assignment] = set()
        for m in iter_assignments(cards):
            r = restrict(m, members)
            targets = task.designated(m)
            if i in targets:
                extends_i.add(r)
            if j in targets:
                extends_j.add(r)
        overlap = extends_i & extends_j
        if overlap:
            r = min(overlap)
            return ScreenResult(
                SCREEN_PAIRWISE_EXCLUSION, False, (i, j, members, r)
            )
    return ScreenResult(SCREEN_PAIRWISE_EXCLUSION, True)


def _factorization_rules(
    task: SummoningTask, allowed: list[Assignment]
) -> tuple[Optional[tuple[LocalDecisionRule, ...]], Optional[tuple]]:
    """Build the local rules for a map that designates at most one point per
    allowed assignment; returns (rules, None) or (None, witness)."""
    rules = []
    for j in range(task.num_returns):
        members = tuple(sorted(task.past_inputs(j)))
        table: dict[Assignment, bool] = {}
        seen: dict[Assignment, Assignment] = {}
        for m in allowed:
            r = restrict(m, members)
            fire = j in task.designated(m)
            if r in table and table[r] != fire:
                return None, (j, seen[r], m)
            table[r] = fire
            seen[r] = m
        rules.append(LocalDecisionRule(j, members, table))
    return tuple(rules), None


def _search_selection(
    task: SummoningTask, allowed: list[Assignment]
) -> Optional[dict]:
    """Backtracking search for a selection f(m) in Q(m) whose per-return
    indicators factor through the past input sets.  Assignments are processed
    in lexicographic order, candidate return indices ascending."""
    members = [tuple(sorted(task.past_inputs(j))) for j in range(task.num_returns)]
    reachable = [
        causally_precedes(task.start, q) for q in task.returns
    ]
    # (j, restriction) -> True (fires) / False (silent)
    state: dict[tuple[int, Assignment], bool] = {}
    selection: dict[Assignment, Optional[int]] = {}

    def cells(m: Assignment) -> list[tuple[int, Assignment]]:
        return [(j, restrict(m, members[j])) for j in range(task.num_returns)]

    def try_set(updates: list[tuple[tuple[int, Assignment], bool]]) -> Optional[list]:
        written = []
        for key, value in updates:
            if key in state:
                if state[key] != value:
                    for k in written:
                        del state[k]
                    return None
            else:
                state[key] = value
                written.append(key)
        return written

    def solve(idx: int) -> bool:
        if idx == len(allowed):
            return True
        m = allowed[idx]
        targets = task.designated(m)
        keys = cells(m)
        if not targets:
            written = try_set([(key, False) for key in keys])
            if written is None:
                return False
            if solve(idx + 1):
                selection[m] = None
                return True
            for k in written:
                del state[k]
            return False
        for j in sorted(targets):
            if not reachable[j]:
                continue
            updates = [
                (key, key[0] == j) for key in keys
            ]
            written = try_set(updates)
            if written is None:
                continue
            if solve(idx + 1):
                selection[m] = j
                return True
            for k in written:
                del state[k]
        return False

    if solve(0):
        return dict(selection)
    return None


def classically_possible(task: SummoningTask) -> FeasibilityVerdict:
    """Decide whether the task is classically possible, with rules or witness.

    For constrained tasks the geometric screens are attached as informational
    only; the decision quantifies over allowed assignments.
    """
    report = validate(task)
    if not report.valid:
        raise ValueError(f"task is invalid: {report.violations[0]}")
    variant, regime = classify_variant(task)
    allowed = allowed_assignments(task)
    constrained = regime is InputRegime.CONSTRAINED

    screens = [check_start_reaches_returns(task)]
    if task.num_returns >= 2:
        screens.append(check_common_past_nonempty(task))
    if not constrained and variant is not ReturnVariant.MULTIPLE:
        screens.append(check_pairwise_exclusion(task))
    if constrained:
        screens = [
            s if s.name == SCREEN_START_REACHES_RETURNS else replace(s, informational=True)
            for s in screens
        ]
    if variant is ReturnVariant.MULTIPLE:
        # start-reaches is only binding for the returns the selection uses
        screens = [replace(s, informational=True) for s in screens]

    if variant is not ReturnVariant.MULTIPLE:
        rules, witness = _factorization_rules(task, allowed)
        start_ok = screens[0].passed
        if rules is not None and start_ok:
            selection = {
                m: (min(task.designated(m)) if task.designated(m) else None)
                for m in allowed
            }
            return FeasibilityVerdict(
                True, variant, regime, tuple(screens), rules, selection
            )
        if rules is None:
            j, m1, m2 = witness
            reason = (
                f"return point {j} cannot be decided from its past inputs: "
                f"assignments {m1} and {m2} agree there but differ on designation"
            )
            return FeasibilityVerdict(
                False, variant, regime, tuple(screens), witness=(m1, m2, j), reason=reason
            )
        failing = screens[0].witness
        reason = f"return points {list(failing)} are outside the causal future of the start point"
        return FeasibilityVerdict(
            False, variant, regime, tuple(screens), witness=(failing,), reason=reason
        )

    selection = _search_selection(task, allowed)
    if selection is None:
        return FeasibilityVerdict(
            False,
            variant,
            regime,
            tuple(screens),
            reason=(
                "no selection of one designated return point per assignment "
                "is decidable from past inputs alone"
            ),
        )
    rules = []
    for j in range(task.num_returns):
        members = tuple(sorted(task.past_inputs(j)))
        table = {}
        for m in allowed:
            table[restrict(m, members)] = selection[m] == j
        rules.append(LocalDecisionRule(j, members, table))
    return FeasibilityVerdict(
        True, variant, regime, tuple(screens), tuple(rules), selection
    )


def determinize(task: SummoningTask, verdict: FeasibilityVerdict) -> SummoningTask:
    """Rewrite a possible multiple-return task so each assignment designates
    exactly the selected point; unused return points are deleted.  Tasks that
    already designate at most one point pass through unchanged."""
    if verdict.variant is not ReturnVariant.MULTIPLE:
        return task
    if not verdict.possible or verdict.selection is None:
        raise ValueError("determinize requires a verdict with a selection")
    used = sorted({j for j in verdict.selection.values() if j is not None})
    remap = {old: new for new, old in enumerate(used)}
    new_map: dict[Assignment, frozenset[int]] = {}
    for m in iter_assignments(task.cardinalities):
        m = tuple(m)
        choice = verdict.selection.get(m)
        new_map[m] = frozenset() if choice is None else frozenset({remap[choice]})
    return SummoningTask(
        task.start,
        task.inputs,
        tuple(task.returns[j] for j in used),
        new_map,
        task.forbidden,
    )


def replay_rules(
    task: SummoningTask, rules: Sequence[LocalDecisionRule], assignment: Sequence[int]
) -> frozenset[int]:
    """Return points that fire when the local rules act on one assignment."""
    return frozenset(rule.return_index for rule in rules if rule.fires(assignment))


# ---------------------------------------------------------------------------
# Independent oracle: exhaustive search over joint local rule tables.

def brute_force_possible(task: SummoningTask) -> bool:
    """Search all joint assignments of per-return local rule tables for one
    whose replay meets the delivery requirement on every allowed assignment.

    Exhaustive with sound pruning; intended for tiny tasks as a cross-check
    of ``classically_possible``.
    """
    report = validate(task)
    if not report.valid:
        raise ValueError(f"task is invalid: {report.violations[0]}")
    variant, _ = classify_variant(task)
    allowed = allowed_assignments(task)
    n_ret = task.num_returns
    members = [tuple(sorted(task.past_inputs(j))) for j in range(n_ret)]
    reachable = [causally_precedes(task.start, q) for q in task.returns]

    cells: list[tuple[int, Assignment]] = []
    seen = set()
    for j in range(n_ret):
        for m in allowed:
            key = (j, restrict(m, members[j]))
            if key not in seen:
                seen.add(key)
                cells.append(key)
    cells.sort()
    state: dict[tuple[int, Assignment], bool] = {}

    def consistent() -> bool:
        for m in allowed:
            targets = task.designated(m)
            fired: list[int] = []
            undecided = 0
            for j in range(n_ret):
                v = state.get((j, restrict(m, members[j])))
                if v is None:
                    undecided += 1
                elif v:
                    fired.append(j)
            if len(fired) > 1:
                return False
            if any(j not in targets for j in fired):
                return False
            if undecided == 0 and not fired and targets:
                return False
        return True

    def search(idx: int) -> bool:
        if idx == len(cells):
            return True
        j, r = cells[idx]
        options = (False,) if not reachable[j] else (False, True)
        for value in options:
            state[(j, r)] = value
            if consistent() and search(idx + 1):
                return True
            del state[(j, r)]
        return False

    return search(0)
