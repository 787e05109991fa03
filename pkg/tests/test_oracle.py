import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rig import oracle
from rig.errors import BudgetError, NotInClassError, UndefinedCurvatureError
from rig.objectives import as_set_function, evaluator_for
from rig.oracle import EnumeratedSetFunction

from conftest import make_scenario


def sqrt_card(n):
    return EnumeratedSetFunction.from_callable(n, lambda s: math.sqrt(len(s)))


def test_curvature_of_square_root_cardinality():
    # reference value 1 - (sqrt 3 - sqrt 2), evaluated with mpmath
    assert oracle.curvature(sqrt_card(3)) == pytest.approx(0.6821627548042177552742424, abs=1e-14)
    assert oracle.total_curvature(sqrt_card(3)) == pytest.approx(0.6821627548042177552742424, abs=1e-14)


def test_curvature_extremes():
    assert oracle.curvature(oracle.modular_function([1.0, 2.0, 0.5])) == pytest.approx(0.0, abs=1e-15)
    f = EnumeratedSetFunction.from_callable(3, lambda s: float(min(len(s), 1)))
    assert oracle.curvature(f) == 1.0


def test_total_curvature_of_squared_cardinality():
    # f = |S|^2 on two elements: marginals of an element are 1 and 3, so c = 2/3
    f = EnumeratedSetFunction.from_callable(2, lambda s: float(len(s)) ** 2)
    assert not oracle.is_submodular(f)
    assert oracle.total_curvature(f) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(NotInClassError):
        oracle.curvature(f)


def test_non_monotone_is_rejected():
    f = EnumeratedSetFunction(2, np.array([0.0, 1.0, 1.0, 0.5]))
    assert not oracle.is_monotone(f)
    v = oracle.monotonicity_violation(f)
    assert v.kind == "monotone"
    with pytest.raises(NotInClassError):
        oracle.total_curvature(f)
    assert oracle.check_lemmas(f).rejected


def test_zero_function_curvature_is_undefined():
    f = EnumeratedSetFunction(2, np.zeros(4))
    with pytest.raises(UndefinedCurvatureError):
        oracle.total_curvature(f)
    with pytest.raises(NotInClassError):
        oracle.curvature(f)


def test_table_validation():
    with pytest.raises(ValueError):
        EnumeratedSetFunction(1, np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        EnumeratedSetFunction(2, np.zeros(3))
    with pytest.raises(BudgetError):
        EnumeratedSetFunction(17, np.zeros(2**17))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_coverage_functions_are_monotone_submodular_with_equal_curvatures(n, seed):
    f = oracle.random_coverage_function(n, np.random.default_rng(seed))
    assert oracle.is_monotone(f) and oracle.is_submodular(f)
    assert abs(oracle.curvature(f) - oracle.total_curvature(f)) <= 1e-12
    assert 0.0 <= oracle.curvature(f) <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.integers(0, 5))
def test_worst_case_attack_matches_brute_force(n, seed, alpha):
    f = oracle.random_monotone_function(n, np.random.default_rng(seed))
    rep = oracle.worst_case_attack(f, alpha)
    k = min(alpha, n)
    best = min(
        f.values[f.full & ~sum(1 << j for j in combo)]
        for r in range(k + 1)
        for combo in itertools.combinations(range(n), r)
    )
    assert rep.value == best
    assert len(rep.A_star) == k


def test_attack_ratio_reported_against_reference():
    f = oracle.modular_function([1.0, 2.0, 3.0])
    rep = oracle.worst_case_attack(f, 1, j_star=4.0)
    assert rep.A_star == {2} and rep.value == 3.0 and rep.ratio == 0.75


def test_restricted_function():
    f = oracle.modular_function([1.0, 2.0, 3.0]).restricted([0, 2])
    assert f.labels == (0, 2) and list(f.values) == [0.0, 1.0, 3.0, 4.0]


def test_null_elements():
    f = oracle.modular_function([1.0, 0.0, 2.0])
    assert oracle.null_elements(f) == [1]


def test_lemmas_pass_on_in_class_functions(rng):
    for _ in range(20):
        rep = oracle.check_lemmas(oracle.random_coverage_function(4, rng))
        assert rep.passed and rep.results["lemma1"].status == "pass"
        assert rep.results["lemma1"].checked == 16
        rep = oracle.check_lemmas(oracle.random_monotone_function(4, rng))
        assert rep.passed and rep.results["lemma2"].status == "not_applicable"


def test_lemma_self_test_hook_fails():
    rep = oracle.check_lemmas(oracle.modular_function([1.0, 2.0]), scale_guarantee=1.5)
    assert not rep.passed
    assert rep.results["lemma1"].counterexample is not None


def test_maxmin_is_order_independent_and_dominates_algorithm():
    from rig.resilient import Step4Solver, algorithm1

    s = make_scenario(horizon=1, alpha=1)
    j_star, plans = oracle.exhaustive_maxmin(s)
    j_rev, _ = oracle.exhaustive_maxmin(s, reverse=True)
    assert j_star == j_rev
    assert oracle.worst_case_attack(as_set_function(s, plans), 1).value == j_star
    res = algorithm1(s, 1, Step4Solver.EXHAUSTIVE)
    assert oracle.worst_case_attack(as_set_function(s, res.plans), 1).value <= j_star + 1e-12


def test_maxmin_brute_force_on_tiny_instance():
    s = make_scenario(horizon=1, alpha=1)
    ev = evaluator_for(s)
    seqs = [(u,) for u in s.controls]
    best = max(
        min(ev.value({0: a}), ev.value({1: b}))
        for a in seqs
        for b in seqs
    )
    assert oracle.exhaustive_maxmin(s)[0] == best


def test_maxmin_guard():
    s = make_scenario(horizon=3)
    with pytest.raises(BudgetError):
        oracle.exhaustive_maxmin(s)
