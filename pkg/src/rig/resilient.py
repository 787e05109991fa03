"""The four-step resilient planner with a communication-round ledger.

1. every robot plans alone and records its solo value ``q_i``;
2. the team agrees on the bait set ``L``: the ``alpha`` robots with the
   largest ``q_i`` (gather to one robot, broadcast back: ``2|V|`` rounds);
3. bait robots keep their solo plans;
4. the remaining robots plan jointly as if ``L`` were absent.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .objectives import ControlSeq, PlanSet
from .planning import coordinate_descent, plan_joint_exhaustive, plan_single
from .scenario import Scenario


class Step4Solver(str, Enum):
    COORDINATE_DESCENT = "coordinate_descent"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class BaitSet:
    members: frozenset[int]
    marginals: Mapping[int, float]


@dataclass(frozen=True)
class ResilientPlan:
    plans: PlanSet
    bait: BaitSet
    rounds: int
    alpha: int
    solo_plans: PlanSet


def step1_marginals(scenario: Scenario) -> dict[int, tuple[ControlSeq, float]]:
    """Solo plan and solo value for every robot.  Costs no communication."""
    return {i: plan_single(scenario, i) for i in scenario.robot_ids}


def step2_select_bait(marginals: Mapping[int, float], alpha: int) -> tuple[BaitSet, int]:
    """Top-``alpha`` robots by solo value, ties to the lower id; returns the rounds charged."""
    if not 0 <= alpha <= len(marginals):
        raise ValueError("alpha must lie in [0, |V|]")
    ranked = sorted(marginals, key=lambda i: (-marginals[i], i))
    bait = BaitSet(frozenset(ranked[:alpha]), dict(marginals))
    return bait, 2 * len(marginals)


def algorithm1(
    scenario: Scenario,
    alpha: int | None = None,
    step4: Step4Solver | str = Step4Solver.COORDINATE_DESCENT,
) -> ResilientPlan:
    """Resilient plans for the whole team against removal of ``alpha`` robots.

    Step 4 either runs coordinate descent over the non-bait robots (ascending
    id, or the scenario's configured order) or, for bound verification, an
    exact joint search.  Coordinate descent costs one round per participating
    robot; the joint search is charged a gather and a broadcast per robot.
    """
    alpha = scenario.alpha if alpha is None else alpha
    step4 = Step4Solver(step4)
    solo = step1_marginals(scenario)
    bait, rounds = step2_select_bait({i: q for i, (_, q) in solo.items()}, alpha)
    plans: PlanSet = {i: solo[i][0] for i in sorted(bait.members)}
    order = scenario.robot_order or scenario.robot_ids
    rest = [i for i in order if i not in bait.members]
    if step4 is Step4Solver.COORDINATE_DESCENT:
        result = coordinate_descent(scenario, rest)
        plans.update(result.plans)
        rounds += result.rounds
    else:
        joint, _ = plan_joint_exhaustive(scenario, rest)
        plans.update(joint)
        rounds += 2 * len(rest)
    return ResilientPlan(
        plans={i: plans[i] for i in sorted(plans)},
        bait=bait,
        rounds=rounds,
        alpha=alpha,
        solo_plans={i: seq for i, (seq, _) in solo.items()},
    )
