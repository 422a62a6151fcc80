import itertools

import pytest

from summoning import scenarios
from summoning.feasibility import (
    brute_force_possible,
    check_common_past_nonempty,
    check_pairwise_exclusion,
    check_start_reaches_returns,
    classically_possible,
    determinize,
    replay_rules,
)
from summoning.geometry import Point
from summoning.tasks import (
    ReturnVariant,
    SummoningTask,
    allowed_assignments,
    classify_variant,
    iter_assignments,
    validate,
)


def pt(t, *x):
    return Point(t, tuple(x))


def asymmetric_past_task():
    """Geometry with S_1 = {0}, S_2 = {0, 1}, S_12 = {0}; the map reads the
    second input, which the first return point can never see."""
    return SummoningTask(
        pt(0, 0),
        ((pt(1, -1), 2), (pt(1, 1), 2)),
        (pt(3, -3), pt(4, 1)),
        {
            m: frozenset({0 if m[1] == 0 else 1})
            for m in iter_assignments((2, 2))
        },
    )


class TestScreens:
    def test_g1_all_pass(self):
        task = scenarios.g1()
        assert check_start_reaches_returns(task).passed
        assert check_common_past_nonempty(task).passed
        assert check_pairwise_exclusion(task).passed

    def test_start_reaches_fails_when_return_moved(self):
        task = scenarios.g1()
        # dt = 1/2 < |dx| = 1 from the start
        moved = SummoningTask(
            task.start,
            task.inputs,
            (task.returns[0], pt(0.5, 1)),
            task.return_map,
        )
        result = check_start_reaches_returns(moved)
        assert not result.passed
        assert result.witness == (1,)

    def test_start_reaches_single_return_at_start(self):
        task = SummoningTask(
            pt(0, 0), ((pt(1, 0), 2),), (pt(0, 0),),
            {(0,): frozenset({0}), (1,): frozenset({0})},
        )
        assert check_start_reaches_returns(task).passed

    def test_common_past_empty_on_no_summoning_geometry(self):
        result = check_common_past_nonempty(scenarios.no_summoning())
        assert not result.passed
        assert result.witness == ((0, 1),)

    def test_common_past_vacuous_single_return(self):
        task = SummoningTask(
            pt(0, 0), ((pt(1, 0), 2),), (pt(2, 0),),
            {(0,): frozenset({0}), (1,): frozenset({0})},
        )
        assert check_common_past_nonempty(task).passed

    def test_pairwise_exclusion_failure(self):
        # restriction (m0=0) on the common past extends both to a map row
        # designating the first return and one designating the second
        result = check_pairwise_exclusion(asymmetric_past_task())
        assert not result.passed
        i, j, members, r = result.witness
        assert (i, j) == (0, 1)
        assert members == (0,)
        assert r == (0,)

    def test_pairwise_exclusion_trivial_no_inputs(self):
        task = SummoningTask(pt(0, 0), (), (pt(1, 0),), {(): frozenset({0})})
        assert check_pairwise_exclusion(task).passed

    def test_pairwise_exclusion_rejects_constrained(self):
        with pytest.raises(ValueError):
            check_pairwise_exclusion(scenarios.no_summoning())

    def test_pairwise_exclusion_rejects_multiple(self):
        with pytest.raises(ValueError):
            check_pairwise_exclusion(scenarios.multi_call())


class TestClassicallyPossible:
    def test_g1_possible_with_full_read_rules(self):
        verdict = classically_possible(scenarios.g1())
        assert verdict.possible
        for rule in verdict.rules:
            assert rule.members == (0, 1)
        # replay oracle: exactly the designated point fires on all 4 rows
        task = scenarios.g1()
        for m in iter_assignments((2, 2)):
            assert replay_rules(task, verdict.rules, m) == task.designated(m)

    def test_no_summoning_possible_classically(self):
        verdict = classically_possible(scenarios.no_summoning())
        assert verdict.possible
        task = scenarios.no_summoning()
        for m in allowed_assignments(task):
            assert replay_rules(task, verdict.rules, m) == task.designated(m)

    def test_unconstrained_variant_of_tight_geometry_impossible(self):
        # all four rows allowed on the no-summoning geometry: the second
        # return's indicator mixes within a class of its single past input
        ns = scenarios.no_summoning()
        task = SummoningTask(
            ns.start,
            ns.inputs,
            ns.returns,
            {
                (1, 0): frozenset({0}),
                (0, 1): frozenset({1}),
                (0, 0): frozenset(),
                (1, 1): frozenset({0}),
            },
        )
        verdict = classically_possible(task)
        assert not verdict.possible
        m1, m2, j = verdict.witness
        assert j == 1
        assert {m1, m2} == {(0, 1), (1, 1)}

    def test_asymmetric_past_impossible(self):
        verdict = classically_possible(asymmetric_past_task())
        assert not verdict.possible

    def test_constant_selection_for_always_both(self):
        task = scenarios.g1()
        both = SummoningTask(
            task.start,
            task.inputs,
            task.returns,
            {m: frozenset({0, 1}) for m in iter_assignments((2, 2))},
        )
        verdict = classically_possible(both)
        assert verdict.possible
        assert set(verdict.selection.values()) == {0}

    def test_unreachable_return_blocks_at_most_one(self):
        task = scenarios.g1()
        moved = SummoningTask(
            task.start, task.inputs, (task.returns[0], pt(0.5, 1)), task.return_map
        )
        verdict = classically_possible(moved)
        assert not verdict.possible

    def test_selection_avoids_unreachable_return(self):
        # multiple-return where one candidate is spacelike from the start:
        # a selection exists through the reachable one
        task = scenarios.g1()
        wide = SummoningTask(
            task.start,
            task.inputs,
            (task.returns[0], pt(0.5, 1)),
            {m: frozenset({0, 1}) for m in iter_assignments((2, 2))},
        )
        verdict = classically_possible(wide)
        assert verdict.possible
        assert set(verdict.selection.values()) == {0}

    def test_no_inputs_constant_map(self):
        task = SummoningTask(pt(0, 0), (), (pt(1, 0),), {(): frozenset({0})})
        verdict = classically_possible(task)
        assert verdict.possible
        assert verdict.rules[0].table == {(): True}


class TestDeterminize:
    def test_constant_selection_deletes_unused_return(self):
        task = scenarios.g1()
        both = SummoningTask(
            task.start, task.inputs, task.returns,
            {m: frozenset({0, 1}) for m in iter_assignments((2, 2))},
        )
        verdict = classically_possible(both)
        refined = determinize(both, verdict)
        assert refined.num_returns == 1
        assert refined.returns == (task.returns[0],)
        assert classify_variant(refined)[0] is ReturnVariant.ONE
        assert classically_possible(refined).possible

    def test_at_most_one_passes_through(self):
        task = scenarios.g1()
        verdict = classically_possible(task)
        assert determinize(task, verdict) is task

    def test_varying_selection_matches_search(self):
        task = scenarios.g1()
        varying = SummoningTask(
            task.start, task.inputs, task.returns,
            {
                (0, 0): frozenset({0}),
                (0, 1): frozenset({0, 1}),
                (1, 0): frozenset({1}),
                (1, 1): frozenset({0, 1}),
            },
        )
        verdict = classically_possible(varying)
        assert verdict.possible
        refined = determinize(varying, verdict)
        assert validate(refined).valid
        for m in iter_assignments((2, 2)):
            selected = refined.designated(m)
            assert len(selected) == 1
            # pointwise selection from the original map, matching the search
            assert next(iter(selected)) in {0, 1}
            assert verdict.selection[m] is not None
        again = classically_possible(refined)
        assert again.possible

    def test_multiple_return_empty_rows_preserved(self):
        task = scenarios.g1()
        widened = SummoningTask(
            task.start, task.inputs, task.returns,
            {
                (0, 0): frozenset(),
                (0, 1): frozenset({0, 1}),
                (1, 0): frozenset({1}),
                (1, 1): frozenset({0, 1}),
            },
        )
        verdict = classically_possible(widened)
        assert verdict.possible
        refined = determinize(widened, verdict)
        assert refined.designated((0, 0)) == frozenset()


class TestSoundnessAndNecessity:
    def test_rules_fire_exactly_once_on_possible_tasks(self):
        found = 0
        seed = 0
        while found < 40:
            task = scenarios.random_possible_task(seed)
            seed += 1
            found += 1
            verdict = classically_possible(task)
            assert verdict.possible
            for m in allowed_assignments(task):
                fired = replay_rules(task, verdict.rules, m)
                assert fired == task.designated(m)

    def test_screens_necessary_for_possibility(self):
        checked = 0
        seed = 1000
        while checked < 60:
            task = scenarios.random_task(seed)
            seed += 1
            if task is None:
                continue
            verdict = classically_possible(task)
            if not verdict.possible:
                continue
            checked += 1
            assert check_start_reaches_returns(task).passed
            assert check_common_past_nonempty(task).passed
            assert check_pairwise_exclusion(task).passed


class TestBruteForceOracle:
    def test_agrees_on_spec_examples(self):
        for task, expected in [
            (scenarios.g1(), True),
            (scenarios.no_summoning(), True),
            (asymmetric_past_task(), False),
        ]:
            assert brute_force_possible(task) == expected
            assert classically_possible(task).possible == expected

    def test_agrees_on_random_corpus(self):
        compared = 0
        seed = 0
        while compared < 40:
            task = scenarios.random_small_task(seed)
            seed += 1
            if task is None:
                continue
            compared += 1
            assert brute_force_possible(task) == classically_possible(task).possible, (
                seed - 1
            )
