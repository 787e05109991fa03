import numpy as np
import pytest

from rig.objectives import evaluator_for
from rig.planning import coordinate_descent, plan_single
from rig.resilient import Step4Solver, algorithm1, step2_select_bait

from conftest import make_scenario

THREE = ((20.0, 14.0, 1.5), (26.0, 20.0, 3.1), (14.0, 21.0, 0.0))


def test_bait_is_top_alpha_by_solo_value():
    bait, rounds = step2_select_bait({0: 3.0, 1: 1.0, 2: 2.0}, 2)
    assert bait.members == {0, 2}
    assert rounds == 6


def test_bait_ties_go_to_lower_id():
    bait, _ = step2_select_bait({0: 2.0, 1: 2.0, 2: 1.0}, 1)
    assert bait.members == {0}
    bait, _ = step2_select_bait({3: 5.0, 1: 5.0}, 1)
    assert bait.members == {1}


def test_bait_alpha_out_of_range():
    with pytest.raises(ValueError):
        step2_select_bait({0: 1.0}, 2)


def test_alpha_zero_reduces_to_coordinate_descent():
    s = make_scenario(robots=THREE)
    res = algorithm1(s, 0)
    assert res.bait.members == frozenset()
    assert res.plans == coordinate_descent(s).plans


def test_bait_robots_keep_solo_plans_and_rest_ignore_them():
    s = make_scenario(robots=THREE)
    res = algorithm1(s, 1)
    (b,) = res.bait.members
    assert res.plans[b] == plan_single(s, b)[0] == res.solo_plans[b]
    rest = [i for i in s.robot_ids if i != b]
    assert {i: res.plans[i] for i in rest} == coordinate_descent(s, rest).plans


@pytest.mark.parametrize("alpha", [0, 1, 2, 3])
def test_round_ledger(alpha):
    s = make_scenario(robots=THREE)
    res = algorithm1(s, alpha)
    assert res.rounds == 2 * 3 + (3 - alpha) <= 9


def test_all_robots_bait_means_all_solo():
    s = make_scenario(robots=THREE)
    res = algorithm1(s, 3)
    assert res.plans == res.solo_plans


def test_exhaustive_step4_beats_or_ties_descent():
    s = make_scenario(robots=THREE, horizon=1)
    ev = evaluator_for(s)
    cd = algorithm1(s, 1)
    ex = algorithm1(s, 1, Step4Solver.EXHAUSTIVE)
    rest = [i for i in s.robot_ids if i not in ex.bait.members]
    assert ev.value({i: ex.plans[i] for i in rest}) >= ev.value({i: cd.plans[i] for i in rest}) - 1e-12


def test_solo_marginals_are_recorded():
    s = make_scenario(robots=THREE)
    res = algorithm1(s, 1)
    for i, q in res.bait.marginals.items():
        assert q == plan_single(s, i)[1]
    assert np.isfinite(list(res.bait.marginals.values())).all()
