import json
import random

import pytest

from summoning import scenarios
from summoning.geometry import Point
from summoning.tasks import (
    InputRegime,
    ReturnVariant,
    SummoningTask,
    TaskTooLargeError,
    allowed_assignments,
    classify_variant,
    enumerate_assignments,
    iter_assignments,
    task_from_json_dict,
    task_to_json_dict,
    validate,
)


def pt(t, *x):
    return Point(t, tuple(x))


class TestPastInputSets:
    def test_g1_past_sets(self):
        # both inputs reach both returns; the (1,1)->(3,-1) leg is lightlike
        task = scenarios.g1()
        assert task.past_inputs(0) == {0, 1}
        assert task.past_inputs(1) == {0, 1}
        assert task.common_past_inputs(0, 1) == {0, 1}

    def test_no_summoning_past_sets(self):
        # dt = 1/2 < |dx| = 2 across sides, so each return sees only its own call
        task = scenarios.no_summoning()
        assert task.past_inputs(0) == {0}
        assert task.past_inputs(1) == {1}
        assert task.common_past_inputs(0, 1) == frozenset()

    def test_no_inputs(self):
        task = SummoningTask(
            pt(0, 0), (), (pt(1, 0),), {(): frozenset({0})}
        )
        assert task.past_inputs(0) == frozenset()

    def test_common_past_requires_distinct(self):
        with pytest.raises(ValueError):
            scenarios.g1().common_past_inputs(1, 1)


class TestValidation:
    def test_g1_valid(self):
        assert validate(scenarios.g1()).valid

    def test_undesignated_return(self):
        task = SummoningTask(
            pt(0, 0),
            ((pt(1, 0), 2),),
            (pt(2, 0), pt(3, 0)),
            {(0,): frozenset({0}), (1,): frozenset({0})},
        )
        report = validate(task)
        assert not report.valid
        assert any("never designated" in v for v in report.violations)

    def test_cardinality_below_two(self):
        task = SummoningTask(
            pt(0, 0),
            ((pt(1, 0), 1),),
            (pt(2, 0),),
            {(0,): frozenset({0})},
        )
        report = validate(task)
        assert any("cardinality" in v for v in report.violations)

    def test_missing_map_rows(self):
        task = SummoningTask(
            pt(0, 0),
            ((pt(1, 0), 2),),
            (pt(2, 0),),
            {(0,): frozenset({0})},
        )
        report = validate(task)
        assert any("missing assignment (1,)" in v for v in report.violations)

    def test_dimension_mismatch(self):
        task = SummoningTask(
            pt(0, 0),
            ((Point(1, (0, 0)), 2),),
            (pt(2, 0),),
            {(0,): frozenset({0}), (1,): frozenset({0})},
        )
        report = validate(task)
        assert any("dimension" in v for v in report.violations)

    def test_all_assignments_forbidden(self):
        task = SummoningTask(
            pt(0, 0),
            ((pt(1, 0), 2),),
            (pt(2, 0),),
            {(0,): frozenset({0}), (1,): frozenset({0})},
            forbidden=frozenset({(0,), (1,)}),
        )
        report = validate(task)
        assert any("forbidden" in v for v in report.violations)


class TestEnumeration:
    def test_lexicographic_two_by_two(self):
        assert list(iter_assignments((2, 2))) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_single_input(self):
        assert list(iter_assignments((3,))) == [(0,), (1,), (2,)]

    def test_counts_match_product(self):
        rng = random.Random(5)
        for _ in range(50):
            cards = tuple(rng.randint(2, 4) for _ in range(rng.randint(1, 5)))
            product = 1
            for n in cards:
                product *= n
            if product > 2**12:
                continue
            assert len(list(iter_assignments(cards))) == product

    def test_forbidden_flags(self):
        task = scenarios.no_summoning()
        rows = list(enumerate_assignments(task))
        assert [(m, ok) for m, ok in rows] == [
            ((0, 0), False),
            ((0, 1), True),
            ((1, 0), True),
            ((1, 1), False),
        ]

    def test_cap(self):
        task = SummoningTask(
            pt(0, 0),
            tuple((pt(1, 0), 2) for _ in range(21)),
            (pt(30, 0),),
            {},
        )
        with pytest.raises(TaskTooLargeError):
            list(enumerate_assignments(task, cap=1 << 20))


class TestClassification:
    def test_g1_one_return_unconstrained(self):
        assert classify_variant(scenarios.g1()) == (
            ReturnVariant.ONE,
            InputRegime.UNCONSTRAINED,
        )

    def test_no_summoning_one_return_constrained(self):
        # over the allowed assignments every image is a singleton
        assert classify_variant(scenarios.no_summoning()) == (
            ReturnVariant.ONE,
            InputRegime.CONSTRAINED,
        )

    def test_empty_image_means_at_most_one(self):
        task = SummoningTask(
            pt(0, 0),
            ((pt(1, 0), 2),),
            (pt(2, 0),),
            {(0,): frozenset(), (1,): frozenset({0})},
        )
        assert classify_variant(task)[0] is ReturnVariant.AT_MOST_ONE

    def test_multi_call_multiple(self):
        assert classify_variant(scenarios.multi_call())[0] is ReturnVariant.MULTIPLE

    def test_stable_under_return_permutation(self):
        rng = random.Random(7)
        for seed in range(30):
            task = scenarios.random_task(seed)
            if task is None:
                continue
            perm = list(range(task.num_returns))
            rng.shuffle(perm)
            inverse = {old: new for new, old in enumerate(perm)}
            permuted = SummoningTask(
                task.start,
                task.inputs,
                tuple(task.returns[j] for j in perm),
                {
                    m: frozenset(inverse[j] for j in targets)
                    for m, targets in task.return_map.items()
                },
                task.forbidden,
            )
            assert classify_variant(permuted) == classify_variant(task)


class TestSerialization:
    @pytest.mark.parametrize(
        "maker",
        [scenarios.g1, scenarios.t3, scenarios.no_summoning, scenarios.hayden_may, scenarios.multi_call],
    )
    def test_round_trip_identity(self, maker):
        task = maker()
        blob = json.dumps(task_to_json_dict(task))
        again = task_from_json_dict(json.loads(blob))
        assert again == task
        assert task_to_json_dict(again) == task_to_json_dict(task)

    def test_round_trip_random(self):
        for seed in range(40):
            task = scenarios.random_task(seed)
            if task is None:
                continue
            again = task_from_json_dict(json.loads(json.dumps(task_to_json_dict(task))))
            assert again == task

    def test_rational_strings(self):
        obj = task_to_json_dict(scenarios.no_summoning())
        assert obj["returns"][0]["t"] == "3/2"

    def test_rejects_duplicate_rows(self):
        obj = task_to_json_dict(scenarios.g1())
        obj["map"].append(obj["map"][0])
        with pytest.raises(ValueError, match="duplicate"):
            task_from_json_dict(obj)

    def test_rejects_declared_dimension_mismatch(self):
        obj = task_to_json_dict(scenarios.g1())
        obj["dimension"] = 2
        with pytest.raises(ValueError, match="dimension"):
            task_from_json_dict(obj)

    def test_rejects_bad_point(self):
        with pytest.raises(ValueError):
            task_from_json_dict({"start": {"t": 0}, "returns": [], "map": []})
