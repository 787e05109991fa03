import itertools
import math

import pytest

from rig.errors import BudgetError
from rig.models import ControlInput
from rig.objectives import evaluator_for, info_gain
from rig.planning import coordinate_descent, plan_joint_exhaustive, plan_single
from rig.scenario import PlannerConfig, PlannerMode

from conftest import make_scenario


def test_zero_horizon_gives_empty_plan():
    s = make_scenario(horizon=0)
    assert plan_single(s, 0) == ((), 0.0)


def test_turn_choice_that_sees_the_target():
    # facing north with the target due east: only turning right brings it into view
    left, right = ControlInput(1.0, 3.0), ControlInput(1.0, -3.0)
    s = make_scenario(robots=((20.0, 20.0, math.pi / 2),), targets=((26.0, 20.0),),
                      horizon=1, controls=(left, right))
    ev = evaluator_for(s)
    assert ev.value({0: (left,)}) == 0.0 and ev.value({0: (right,)}) > 0.0
    seq, value = plan_single(s, 0)
    assert seq == (right,)
    assert value == info_gain(s, [0], {0: seq})


def test_returned_value_is_bit_exact(scenario):
    seq, value = plan_single(scenario, 1, {0: (scenario.controls[0],) * 2})
    assert value == info_gain(scenario, [0, 1], {0: (scenario.controls[0],) * 2, 1: seq})


def test_exhaustive_is_the_argmax_with_first_tie(scenario):
    ev = evaluator_for(scenario)
    seqs = list(itertools.product(scenario.controls, repeat=scenario.horizon))
    vals = [ev.value({0: q}) for q in seqs]
    best = max(vals)
    seq, value = plan_single(scenario, 0)
    assert value == best and seq == seqs[vals.index(best)]


def test_exhaustive_dominates_greedy(rng):
    for _ in range(20):
        xy = rng.uniform(15, 25, size=(2, 2))
        s = make_scenario(robots=((*xy[0], rng.uniform(-3, 3)), (*xy[1], rng.uniform(-3, 3))))
        _, exact = plan_single(s, 0)
        _, greedy = plan_single(s, 0, mode=PlannerMode.GREEDY)
        assert exact >= greedy - 1e-9


def test_fixed_robot_cannot_be_replanned(scenario):
    with pytest.raises(ValueError):
        plan_single(scenario, 0, {0: ()})


def test_budget_guard():
    s = make_scenario().with_(planner=PlannerConfig(PlannerMode.EXHAUSTIVE, max_expansions=4))
    with pytest.raises(BudgetError):
        plan_single(s, 0)


def test_coordinate_descent_single_robot_is_plan_single(scenario):
    res = coordinate_descent(scenario, [1])
    seq, value = plan_single(scenario, 1)
    assert res.plans == {1: seq} and res.value == value and res.rounds == 1


def test_coordinate_descent_prefixes_are_monotone():
    s = make_scenario(robots=((20, 14, 1.5), (26, 20, 3.1), (14, 20, 0.0)))
    res = coordinate_descent(s)
    ev = evaluator_for(s)
    prefix = [ev.value({i: res.plans[i] for i in range(k)}) for k in range(4)]
    assert all(b >= a - 1e-9 for a, b in zip(prefix, prefix[1:]))
    assert res.rounds == 3 and res.value == prefix[-1]


def test_coordinate_descent_is_deterministic(scenario):
    assert coordinate_descent(scenario).plans == coordinate_descent(scenario).plans


def test_coordinate_descent_rejects_repeated_robot(scenario):
    with pytest.raises(ValueError):
        coordinate_descent(scenario, [0, 0])


def test_coordinate_descent_at_least_half_the_joint_optimum(scenario):
    _, joint = plan_joint_exhaustive(scenario, scenario.robot_ids)
    assert coordinate_descent(scenario).value >= 0.5 * joint - 1e-9
