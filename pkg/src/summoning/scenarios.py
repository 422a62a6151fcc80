"""Built-in task scenarios and seeded random task generators.

All coordinates are exact (ints or Fractions), so lightlike relations in the
canonical geometries survive serialization.  Generation is deterministic in
the seed.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Callable, Optional

from .feasibility import classically_possible
from .geometry import Point
from .tasks import (
    Assignment,
    ReturnVariant,
    SummoningTask,
    classify_variant,
    iter_assignments,
    validate,
)


def _pt(t, *x) -> Point:
    return Point(t, tuple(x))


def g1() -> SummoningTask:
    """Two bits, two lightlike-reachable return points; parity picks the side."""
    return_map = {
        m: frozenset({0 if (m[0] + m[1]) % 2 == 0 else 1})
        for m in iter_assignments((2, 2))
    }
    return SummoningTask(
        start=_pt(0, 0),
        inputs=((_pt(1, -1), 2), (_pt(1, 1), 2)),
        returns=(_pt(3, -1), _pt(3, 1)),
        return_map=return_map,
    )


def t3() -> SummoningTask:
    """Three return points, every input in every return's past."""
    return_map = {
        m: frozenset({(m[0] + 2 * m[1]) % 3}) for m in iter_assignments((2, 2))
    }
    return SummoningTask(
        start=_pt(0, 0),
        inputs=((_pt(1, -1), 2), (_pt(1, 1), 2)),
        returns=(_pt(6, -2), _pt(6, 0), _pt(6, 2)),
        return_map=return_map,
    )


def no_summoning() -> SummoningTask:
    """Exactly one call arrives at one of two spacelike separated points and
    the state is owed at that side shortly after; the return points share no
    past input point.  Classically a broadcast description suffices."""
    return_map = {
        (1, 0): frozenset({0}),
        (0, 1): frozenset({1}),
        (0, 0): frozenset(),
        (1, 1): frozenset(),
    }
    half = Fraction(3, 2)
    return SummoningTask(
        start=_pt(0, 0),
        inputs=((_pt(1, -1), 2), (_pt(1, 1), 2)),
        returns=(_pt(half, -1), _pt(half, 1)),
        return_map=return_map,
        forbidden=frozenset({(0, 0), (1, 1)}),
    )


def hayden_may() -> SummoningTask:
    """One call among call points that all precede every return point."""
    return_map = {
        (1, 0): frozenset({0}),
        (0, 1): frozenset({1}),
        (0, 0): frozenset(),
        (1, 1): frozenset(),
    }
    return SummoningTask(
        start=_pt(0, 0),
        inputs=((_pt(1, -1), 2), (_pt(1, 1), 2)),
        returns=(_pt(4, -1), _pt(4, 1)),
        return_map=return_map,
        forbidden=frozenset({(0, 0), (1, 1)}),
    )


def multi_call(n_calls: int = 3) -> SummoningTask:
    """Unconstrained calls; any called point is an acceptable destination."""
    if not 2 <= n_calls <= 4:
        raise ValueError("multi_call supports 2..4 call points")
    spread = [-(n_calls - 1) + 2 * k for k in range(n_calls)]
    horizon = 2 * n_calls + 2
    cards = (2,) * n_calls
    return_map = {
        m: frozenset(j for j, bit in enumerate(m) if bit)
        for m in iter_assignments(cards)
    }
    return SummoningTask(
        start=_pt(0, 0),
        inputs=tuple((_pt(1, x), 2) for x in spread),
        returns=tuple(_pt(horizon, x) for x in spread),
        return_map=return_map,
    )


def _random_geometry(
    rng: random.Random, n_inputs: int, n_returns: int
) -> tuple[Point, tuple, tuple]:
    start = _pt(0, 0)
    inputs = tuple(_pt(1, rng.randint(-3, 3)) for _ in range(n_inputs))
    returns = tuple(
        _pt(rng.randint(3, 5), rng.randint(-3, 3)) for _ in range(n_returns)
    )
    return start, inputs, returns


def _random_shape(
    rng: random.Random,
    max_inputs: int = 4,
    max_card: int = 3,
    max_returns: int = 3,
    max_assignments: int = 64,
) -> tuple[int, tuple[int, ...], int]:
    n_inputs = rng.randint(1, max_inputs)
    while True:
        cards = tuple(rng.randint(2, max_card) for _ in range(n_inputs))
        count = 1
        for n in cards:
            count *= n
        if count <= max_assignments:
            return n_inputs, cards, rng.randint(1, max_returns)


def random_task(
    seed: int,
    variant: str = "at_most_one",
    max_inputs: int = 4,
    max_card: int = 3,
    max_returns: int = 3,
    max_assignments: int = 64,
) -> Optional[SummoningTask]:
    """One random unconstrained task; None when the draw is structurally
    invalid (some return point never designated)."""
    rng = random.Random(seed)
    n_inputs, cards, n_returns = _random_shape(
        rng, max_inputs, max_card, max_returns, max_assignments
    )
    start, inputs, returns = _random_geometry(rng, n_inputs, n_returns)
    return_map: dict[Assignment, frozenset[int]] = {}
    for m in iter_assignments(cards):
        if variant == "multiple":
            size = rng.choices((0, 1, 2), weights=(2, 5, 3))[0]
            size = min(size, n_returns)
            return_map[m] = frozenset(rng.sample(range(n_returns), size))
        else:
            if rng.random() < 0.25:
                return_map[m] = frozenset()
            else:
                return_map[m] = frozenset({rng.randrange(n_returns)})
    task = SummoningTask(
        start, tuple((p, n) for p, n in zip(inputs, cards)), returns, return_map
    )
    if not validate(task).valid:
        return None
    if variant == "multiple":
        v, _ = classify_variant(task)
        if v is not ReturnVariant.MULTIPLE:
            return None
    return task


def _constructed_possible(seed: int) -> Optional[SummoningTask]:
    """Build a task that is possible by construction: a dedicated input in
    every return point's past selects the candidate, and a per-return
    predicate of its past inputs decides between returning there and nowhere."""
    rng = random.Random(seed)
    n_returns = rng.randint(2, 3)
    n_extra = rng.randint(0, 2)
    selector_card = 3 if n_returns == 3 else rng.choice((2, 3))
    cards = (selector_card,) + tuple(rng.randint(2, 3) for _ in range(n_extra))
    count = 1
    for n in cards:
        count *= n
    if count > 64:
        return None
    start = _pt(0, 0)
    # the selector input sits at the start's location a step later, so it is
    # in every return point's past; extras are scattered
    inputs = (_pt(1, 0),) + tuple(_pt(1, rng.randint(-3, 3)) for _ in range(n_extra))
    returns = tuple(_pt(rng.randint(3, 5), rng.randint(-2, 2)) for _ in range(n_returns))
    task_geom = SummoningTask(
        start,
        tuple((p, n) for p, n in zip(inputs, cards)),
        returns,
        {m: frozenset() for m in iter_assignments(cards)},
    )
    return_map: dict[Assignment, frozenset[int]] = {}
    predicates = []
    for j in range(n_returns):
        members = tuple(sorted(task_geom.past_inputs(j)))
        table = {
            r: rng.random() < 0.8
            for r in itertools.product(*(range(cards[k]) for k in members))
        }
        predicates.append((members, table))
    for m in iter_assignments(cards):
        j = m[0] % n_returns
        members, table = predicates[j]
        fire = table[tuple(m[k] for k in members)]
        return_map[m] = frozenset({j}) if fire else frozenset()
    task = SummoningTask(
        start, tuple((p, n) for p, n in zip(inputs, cards)), returns, return_map
    )
    return task if validate(task).valid else None


def random_possible_task(seed: int, max_attempts: int = 2000) -> SummoningTask:
    """A seeded random unconstrained task that designates at most one point
    per assignment and is classically possible.

    Alternates between rejection sampling of fully random maps and maps that
    factor through past inputs by construction, for variety on both tight and
    permissive geometries.
    """
    rng = random.Random(f"possible:{seed}")
    for attempt in range(max_attempts):
        sub = rng.randrange(1 << 30)
        task = (
            _constructed_possible(sub)
            if attempt % 2 == 0
            else random_task(sub, "at_most_one")
        )
        if task is None:
            continue
        verdict = classically_possible(task)
        if verdict.possible:
            return task
    raise RuntimeError(f"no possible task found in {max_attempts} attempts (seed {seed})")


def random_possible_multiple_task(seed: int, max_attempts: int = 4000) -> SummoningTask:
    """A seeded classically possible multiple-return task."""
    rng = random.Random(f"multiple:{seed}")
    for attempt in range(max_attempts):
        sub = rng.randrange(1 << 30)
        if attempt % 2 == 0:
            base = _constructed_possible(sub)
            if base is None:
                continue
            # widen some rows with an always-reachable extra point, keeping a
            # constant selection available
            extra = random.Random(sub).randrange(base.num_returns)
            new_map = {}
            widened = False
            sub_rng = random.Random(f"widen:{sub}")
            for m in iter_assignments(base.cardinalities):
                targets = set(base.designated(m))
                if targets and sub_rng.random() < 0.6:
                    targets.add(extra)
                new_map[m] = frozenset(targets)
                if len(new_map[m]) > 1:
                    widened = True
            if not widened:
                continue
            task = SummoningTask(
                base.start, base.inputs, base.returns, new_map
            )
        else:
            task = random_task(sub, "multiple")
            if task is None:
                continue
        if not validate(task).valid:
            continue
        v, _ = classify_variant(task)
        if v is not ReturnVariant.MULTIPLE:
            continue
        if classically_possible(task).possible:
            return task
    raise RuntimeError(f"no possible multiple-return task found (seed {seed})")


def random_small_task(seed: int) -> Optional[SummoningTask]:
    """Tiny tasks (product space <= 16) for oracle cross-checks; may be
    constrained and of any variant."""
    rng = random.Random(f"small:{seed}")
    task = random_task(
        rng.randrange(1 << 30),
        variant=rng.choice(("at_most_one", "multiple")),
        max_inputs=2,
        max_card=3,
        max_returns=3,
        max_assignments=16,
    )
    if task is None:
        return None
    if rng.random() < 0.3:
        space = list(iter_assignments(task.cardinalities))
        forbidden = frozenset(rng.sample(space, rng.randint(1, max(1, len(space) // 4))))
        task = SummoningTask(
            task.start, task.inputs, task.returns, task.return_map, forbidden
        )
        if not validate(task).valid:
            return None
    return task


GENERATORS: dict[str, Callable[..., SummoningTask]] = {
    "g1": lambda seed=None: g1(),
    "t3": lambda seed=None: t3(),
    "no_summoning": lambda seed=None: no_summoning(),
    "hayden_may": lambda seed=None: hayden_may(),
    "multi_call": lambda seed=None, n_calls=3: multi_call(n_calls),
    "random_possible": lambda seed=0: random_possible_task(seed if seed is not None else 0),
}


def generate(name: str, seed: Optional[int] = None, **params) -> SummoningTask:
    if name not in GENERATORS:
        known = ", ".join(sorted(GENERATORS))
        raise KeyError(f"unknown scenario {name!r}; known scenarios: {known}")
    return GENERATORS[name](seed=seed, **params)
