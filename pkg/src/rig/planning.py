"""Single-robot control optimization and sequential coordinate descent."""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import BudgetError, SingularGeometryError
from .estimation import joseph_update, clamp_psd
from .models import stack_blocks, stacked_observation, unicycle_step
from .objectives import ControlSeq, PlanSet, Evaluator, evaluator_for, logdet
from .scenario import ObjectiveKind, PlannerMode, Scenario


class CoordinateDescentResult(NamedTuple):
    plans: PlanSet
    value: float
    rounds: int


def _check_budget(scenario: Scenario, n_sequences: int) -> None:
    if n_sequences > scenario.planner.max_expansions:
        raise BudgetError(
            f"{n_sequences} candidate sequences exceed max_expansions="
            f"{scenario.planner.max_expansions}"
        )


def _sequences(scenario: Scenario) -> Iterable[ControlSeq]:
    # lexicographic over the declared control order
    return itertools.product(scenario.controls, repeat=scenario.horizon)


def plan_single(
    scenario: Scenario,
    robot: int,
    fixed_plans: Mapping[int, ControlSeq] | None = None,
    *,
    mode: PlannerMode | None = None,
) -> tuple[ControlSeq, float]:
    """Best control sequence for ``robot`` given the already fixed plans of others.

    Returns the sequence together with the team gain of ``fixed_plans`` plus
    the new sequence.  Ties go to the earliest candidate in the declared
    control order.
    """
    fixed = dict(fixed_plans or {})
    if robot in fixed:
        raise ValueError(f"robot {robot} already has a fixed plan")
    ev = evaluator_for(scenario)
    if scenario.horizon == 0:
        return (), ev.value({**fixed, robot: ()})
    mode = PlannerMode(mode or scenario.planner.mode)
    if mode is PlannerMode.EXHAUSTIVE:
        return _plan_exhaustive(scenario, ev, robot, fixed)
    seq = _plan_greedy(scenario, ev, robot, fixed)
    return seq, ev.value({**fixed, robot: seq})


def _plan_exhaustive(
    scenario: Scenario, ev: Evaluator, robot: int, fixed: PlanSet
) -> tuple[ControlSeq, float]:
    _check_budget(scenario, len(scenario.controls) ** scenario.horizon)
    best_seq, best_val = None, -math.inf
    for seq in _sequences(scenario):
        try:
            val = ev.value({**fixed, robot: seq})
        except SingularGeometryError:
            continue
        if val > best_val:
            best_seq, best_val = seq, val
    if best_seq is None:
        raise SingularGeometryError("every candidate sequence hits a singular geometry")
    return best_seq, best_val


def _step_cost(kind: ObjectiveKind, cov: np.ndarray) -> float:
    return logdet(cov) if kind is ObjectiveKind.LOGDET else float(np.trace(cov))


def _plan_greedy(scenario: Scenario, ev: Evaluator, robot: int, fixed: PlanSet) -> ControlSeq:
    """Pick each step's control to minimize that step's posterior cost."""
    model = ev.model
    others = [ev.blocks(i, seq) for i, seq in sorted(fixed.items())]
    dim = scenario.prior_cov.shape[0]
    cov = scenario.prior_cov
    pose = scenario.robots[robot]
    bound = scenario.env_size
    chosen = []
    for t in range(1, scenario.horizon + 1):
        pred = clamp_psd(model.A @ cov @ model.A.T + model.W)
        mean_t = model.predicted_mean(t)
        best = None
        for u in scenario.controls:
            nxt = unicycle_step(pose, u, scenario.tau, paper_literal=scenario.paper_literal_unicycle)
            nxt = type(nxt)(min(max(nxt.x1, 0.0), bound), min(max(nxt.x2, 0.0), bound), nxt.theta)
            try:
                own = stacked_observation(nxt, mean_t, scenario.sensor)
            except SingularGeometryError:
                continue
            H, V = stack_blocks([b[t - 1] for b in others] + [own], dim)
            post = joseph_update(pred, H, V)[1] if H.shape[0] else pred
            cost = _step_cost(scenario.objective, post)
            if best is None or cost < best[0]:
                best = (cost, u, nxt, post)
        if best is None:
            raise SingularGeometryError("no admissible control avoids a singular geometry")
        _, u, pose, cov = best
        chosen.append(u)
    return tuple(chosen)


def coordinate_descent(
    scenario: Scenario,
    order: Sequence[int] | None = None,
    *,
    mode: PlannerMode | None = None,
) -> CoordinateDescentResult:
    """Sequential planning: each robot best-responds to its predecessors' plans.

    ``order`` defaults to the scenario's configured order restricted to all
    robots, else ascending ids.  Only the robots in ``order`` take part; every
    robot transmits its plan exactly once, so the round count is ``len(order)``.
    """
    if order is None:
        order = scenario.robot_order or scenario.robot_ids
    order = list(order)
    if len(set(order)) != len(order):
        raise ValueError("order must list each robot once")
    plans: PlanSet = {}
    value = 0.0
    for robot in order:
        seq, value = plan_single(scenario, robot, plans, mode=mode)
        plans[robot] = seq
    return CoordinateDescentResult(plans, value, len(order))


def plan_joint_exhaustive(scenario: Scenario, robots: Sequence[int]) -> tuple[PlanSet, float]:
    """Exact joint optimum of the gain over all control sequences of ``robots``."""
    robots = sorted(robots)
    ev = evaluator_for(scenario)
    if not robots:
        return {}, 0.0
    per_robot = len(scenario.controls) ** scenario.horizon
    _check_budget(scenario, per_robot ** len(robots))
    seqs = list(_sequences(scenario))
    best_plans, best_val = None, -math.inf
    for combo in itertools.product(seqs, repeat=len(robots)):
        plans = dict(zip(robots, combo))
        val = ev.value(plans)
        if val > best_val:
            best_plans, best_val = plans, val
    return best_plans, best_val
