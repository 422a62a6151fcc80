"""Summoning task model: geometry, bounded integer inputs, and the return map.

A task fixes a start point where the state is handed over, input points where
bounded integers arrive, candidate return points, and an explicit table
mapping every input assignment to the set of return points it designates
(possibly empty).  Constrained tasks additionally list assignments that are
guaranteed never to arise.

All indices are 0-based in Python; the JSON file format uses 1-based indices
for input and return points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Iterator, Mapping, Sequence

from .geometry import Coordinate, Point, causally_precedes

Assignment = tuple[int, ...]

MAX_ASSIGNMENTS = 1 << 20


class TaskTooLargeError(ValueError):
    """The input product space exceeds the enumeration cap."""


class ReturnVariant(str, Enum):
    ONE = "one"
    AT_MOST_ONE = "at_most_one"
    MULTIPLE = "multiple"


class InputRegime(str, Enum):
    UNCONSTRAINED = "unconstrained"
    CONSTRAINED = "constrained"


@dataclass(frozen=True)
class SummoningTask:
    """Immutable task description; safe to share across workers."""

    start: Point
    inputs: tuple[tuple[Point, int], ...]  # (input point, cardinality n_k)
    returns: tuple[Point, ...]
    return_map: Mapping[Assignment, frozenset[int]]
    forbidden: frozenset[Assignment] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple((p, int(n)) for p, n in self.inputs))
        object.__setattr__(self, "returns", tuple(self.returns))
        object.__setattr__(
            self,
            "return_map",
            {tuple(m): frozenset(v) for m, v in self.return_map.items()},
        )
        object.__setattr__(
            self, "forbidden", frozenset(tuple(m) for m in self.forbidden)
        )

    @property
    def dimension(self) -> int:
        return self.start.dimension

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def num_returns(self) -> int:
        return len(self.returns)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(n for _, n in self.inputs)

    @property
    def assignment_count(self) -> int:
        count = 1
        for n in self.cardinalities:
            count *= n
        return count

    def is_allowed(self, assignment: Sequence[int]) -> bool:
        return tuple(assignment) not in self.forbidden

    def designated(self, assignment: Sequence[int]) -> frozenset[int]:
        return self.return_map[tuple(assignment)]

    def past_inputs(self, j: int) -> frozenset[int]:
        """Input point indices in the causal past of return point ``j``."""
        q = self.returns[j]
        return frozenset(
            k for k, (p, _) in enumerate(self.inputs) if causally_precedes(p, q)
        )

    def common_past_inputs(self, i: int, j: int) -> frozenset[int]:
        """Input points in the causal past of both return points ``i`` and ``j``."""
        if i == j:
            raise ValueError("common past input set requires two distinct returns")
        return self.past_inputs(i) & self.past_inputs(j)


def iter_assignments(cardinalities: Sequence[int]) -> Iterator[Assignment]:
    """All assignments of the product space in lexicographic order."""
    return itertools.product(*(range(n) for n in cardinalities))


def enumerate_assignments(
    task: SummoningTask, cap: int = MAX_ASSIGNMENTS
) -> Iterator[tuple[Assignment, bool]]:
    """Yield every assignment with an ``allowed`` flag, lexicographically."""
    if task.assignment_count > cap:
        raise TaskTooLargeError(
            f"{task.assignment_count} assignments exceed the cap of {cap}; "
            "reduce input cardinalities"
        )
    for m in iter_assignments(task.cardinalities):
        yield m, task.is_allowed(m)


def allowed_assignments(task: SummoningTask, cap: int = MAX_ASSIGNMENTS) -> list[Assignment]:
    return [m for m, ok in enumerate_assignments(task, cap) if ok]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations


def validate(task: SummoningTask) -> ValidationReport:
    """Collect every structural violation; the task is valid iff none."""
    problems: list[str] = []
    dim = task.dimension
    for k, (p, n) in enumerate(task.inputs):
        if p.dimension != dim:
            problems.append(f"input point {k} has dimension {p.dimension}, expected {dim}")
        if n < 2:
            problems.append(f"input {k} has cardinality {n}; every input needs at least 2 values")
    for j, q in enumerate(task.returns):
        if q.dimension != dim:
            problems.append(f"return point {j} has dimension {q.dimension}, expected {dim}")
    if task.num_returns < 1:
        problems.append("task has no return points")

    space = set(iter_assignments(task.cardinalities))
    keys = set(task.return_map.keys())
    for m in sorted(keys - space):
        problems.append(f"return map key {m} is outside the input product space")
    for m in sorted(space - keys):
        problems.append(f"return map is missing assignment {m}")
    for m, targets in sorted(task.return_map.items()):
        bad = [j for j in targets if not 0 <= j < task.num_returns]
        if bad:
            problems.append(f"return map at {m} names invalid return indices {sorted(bad)}")
    for m in sorted(task.forbidden - space):
        problems.append(f"forbidden assignment {m} is outside the input product space")
    if space and task.forbidden >= space:
        problems.append("every assignment is forbidden; no allowed inputs remain")

    allowed = [m for m in sorted(space & keys) if task.is_allowed(m)]
    designated: set[int] = set()
    for m in allowed:
        designated |= set(j for j in task.return_map[m] if 0 <= j < task.num_returns)
    for j in range(task.num_returns):
        if j not in designated:
            problems.append(f"return point {j} is never designated by any allowed assignment")
    return ValidationReport(tuple(problems))


def classify_variant(task: SummoningTask) -> tuple[ReturnVariant, InputRegime]:
    """Classify the return map over allowed assignments, and the input regime."""
    regime = InputRegime.CONSTRAINED if task.forbidden else InputRegime.UNCONSTRAINED
    sizes = [len(task.designated(m)) for m in allowed_assignments(task)]
    if any(s > 1 for s in sizes):
        variant = ReturnVariant.MULTIPLE
    elif any(s == 0 for s in sizes):
        variant = ReturnVariant.AT_MOST_ONE
    else:
        variant = ReturnVariant.ONE
    return variant, regime


# ---------------------------------------------------------------------------
# JSON serialization.  Exact coordinates serialize as ints or "p/q" strings,
# floats as JSON numbers; point indices are 1-based on the wire.

def coordinate_to_json(c: Coordinate) -> Any:
    if isinstance(c, bool):
        raise TypeError("boolean is not a coordinate")
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, float):
        return c
    raise TypeError(f"unsupported coordinate type: {type(c)!r}")


def coordinate_from_json(value: Any) -> Coordinate:
    if isinstance(value, bool):
        raise ValueError("boolean is not a coordinate")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        frac = Fraction(value)  # accepts "3/2" and decimal strings
        return frac.numerator if frac.denominator == 1 else frac
    raise ValueError(f"cannot parse coordinate from {value!r}")


def point_to_json(p: Point) -> dict[str, Any]:
    return {"t": coordinate_to_json(p.t), "x": [coordinate_to_json(c) for c in p.x]}


def point_from_json(obj: Any) -> Point:
    if not isinstance(obj, dict) or "t" not in obj or "x" not in obj:
        raise ValueError(f"a point must be an object with 't' and 'x': {obj!r}")
    return Point(coordinate_from_json(obj["t"]), tuple(coordinate_from_json(c) for c in obj["x"]))


def task_to_json_dict(task: SummoningTask) -> dict[str, Any]:
    rows = [
        {"m": list(m), "returns": [j + 1 for j in sorted(task.return_map[m])]}
        for m in sorted(task.return_map.keys())
    ]
    out: dict[str, Any] = {
        "dimension": task.dimension,
        "start": point_to_json(task.start),
        "inputs": [
            {"point": point_to_json(p), "cardinality": n} for p, n in task.inputs
        ],
        "returns": [point_to_json(q) for q in task.returns],
        "map": rows,
    }
    if task.forbidden:
        out["forbidden"] = [list(m) for m in sorted(task.forbidden)]
    return out


def task_from_json_dict(obj: Any) -> SummoningTask:
    if not isinstance(obj, dict):
        raise ValueError("task file must contain a JSON object")
    try:
        start = point_from_json(obj["start"])
        inputs = tuple(
            (point_from_json(row["point"]), int(row["cardinality"]))
            for row in obj.get("inputs", [])
        )
        returns = tuple(point_from_json(q) for q in obj["returns"])
    except KeyError as exc:
        raise ValueError(f"task file is missing field {exc}") from exc
    if "dimension" in obj and int(obj["dimension"]) != start.dimension:
        raise ValueError(
            f"declared dimension {obj['dimension']} does not match start point "
            f"dimension {start.dimension}"
        )
    return_map: dict[Assignment, frozenset[int]] = {}
    for row in obj.get("map", []):
        m = tuple(int(v) for v in row["m"])
        if m in return_map:
            raise ValueError(f"duplicate return map row for assignment {m}")
        return_map[m] = frozenset(int(j) - 1 for j in row.get("returns", []))
    forbidden = frozenset(tuple(int(v) for v in m) for m in obj.get("forbidden", []))
    return SummoningTask(start, inputs, returns, return_map, forbidden)
