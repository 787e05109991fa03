import json

import numpy as np
import pytest

from rig import bounds, oracle
from rig.scenario import ObjectiveKind


def test_instances_stay_within_the_desk_scale_family():
    rng = np.random.default_rng(0)
    for _ in range(30):
        s = bounds.random_desk_instance(rng)
        assert s.n_robots in (2, 3) and s.horizon in (1, 2)
        assert len(s.controls) <= 3 and 1 <= s.alpha <= 2 and s.alpha < s.n_robots


def test_each_suite_runs_clean_on_a_few_instances():
    recs = bounds.run_suites(n_instances=3, n_monotone=2, seed=4)
    assert {r["suite"] for r in recs} == set(bounds.SUITES)
    assert all(r["ok"] for r in recs)
    json.dumps(recs)


def test_suite_filter():
    recs = bounds.run_suites(["lemmas"], n_instances=5)
    assert {r["suite"] for r in recs} == {"lemmas"}


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        bounds.run_suites(["nope"])


def test_inflated_guarantees_are_caught():
    recs = bounds.run_suites(["theorem1", "lemmas"], n_instances=5, n_monotone=0, scale=1.5)
    assert any(not r["ok"] for r in recs)


def test_family_routing():
    rng = np.random.default_rng(1)
    s = bounds.random_desk_instance(rng, ObjectiveKind.LOGDET)
    rec = bounds.check_theorem1(s)
    assert rec["family"] in ("submodular", "monotone")
    if rec["family"] == "submodular":
        assert rec["guaranteed_ratio"] >= 1 / (1 + s.alpha) - 1e-12


def test_extended_function_labels_each_agent():
    rng = np.random.default_rng(2)
    s = bounds.random_desk_instance(rng)
    plans = {i: (s.controls[0],) * s.horizon for i in s.robot_ids}
    f = bounds.extended_function(s, plans, plans)
    assert f.n == 2 * s.n_robots
    assert oracle.is_monotone(f)


def test_rounds_record_matches_formula():
    rec = bounds.check_rounds(bounds.random_desk_instance(np.random.default_rng(3)))
    assert rec["ok"] and rec["rounds"] == rec["expected_rounds"]
