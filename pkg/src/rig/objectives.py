"""Information objectives and the set-function view over active robot subsets.

The planner maximizes an information *gain*: the cost objective (average
log-determinant or trace of the error covariance) of the prediction-only
filter minus the same cost when the active robots observe.  The gain is zero
for the empty team and non-decreasing in the team.
"""

from __future__ import annotations

import threading
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .estimation import observation_blocks, propagate_blocks
from .models import ControlInput, RobotState, StackedObservation, rollout
from .scenario import ObjectiveKind, Scenario

ControlSeq = tuple[ControlInput, ...]
PlanSet = dict[int, ControlSeq]
Agent = tuple[int, ControlSeq]


def logdet(cov: np.ndarray) -> float:
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def raw_objective(kind: ObjectiveKind | str, covs: Sequence[np.ndarray]) -> float:
    """Time-averaged log-determinant or trace of a covariance trajectory."""
    if len(covs) == 0:
        raise ValueError("empty covariance trajectory")
    kind = ObjectiveKind(kind)
    if kind is ObjectiveKind.LOGDET:
        total = sum(logdet(c) for c in covs)
    else:
        total = sum(float(np.trace(c)) for c in covs)
    return total / len(covs)


def restrict(plans: Mapping[int, ControlSeq], robots: Iterable[int]) -> PlanSet:
    return {i: plans[i] for i in robots}


class Evaluator:
    """Memoized information-gain evaluation for one scenario.

    Values are keyed by the multiset of (robot id, control sequence) agents,
    so repeated queries return bit-identical floats.  A robot id may appear
    more than once with different sequences; each copy then acts as an
    independent sensor, which is what the oracle uses to reason about
    alternative plans side by side.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.model = scenario.target_model()
        self._lock = threading.Lock()
        self._blocks: dict[Agent, list[StackedObservation]] = {}
        self._values: dict[tuple[Agent, ...], float] = {}
        T = scenario.horizon
        self._baseline_covs = propagate_blocks(
            scenario.prior_cov, self.model.A, self.model.W, [[] for _ in range(T)]
        )
        self.baseline = (
            raw_objective(scenario.objective, self._baseline_covs) if T > 0 else 0.0
        )

    def trajectory(self, robot: int, controls: Sequence[ControlInput]) -> list[RobotState]:
        s = self.scenario
        return rollout(
            s.robots[robot],
            controls,
            s.tau,
            paper_literal=s.paper_literal_unicycle,
            bounds=s.env_size,
        )

    def blocks(self, robot: int, controls: Sequence[ControlInput]) -> list[StackedObservation]:
        key = (robot, tuple(controls))
        cached = self._blocks.get(key)
        if cached is None:
            cached = observation_blocks(
                self.trajectory(robot, controls), self.model, self.scenario.sensor
            )
            self._blocks[key] = cached
        return cached

    def covariances(self, agents: Iterable[Agent]) -> list[np.ndarray]:
        agents = sorted(agents)
        T = self.scenario.horizon
        per_agent = [self.blocks(i, seq) for i, seq in agents]
        for seq_blocks in per_agent:
            if len(seq_blocks) != T:
                raise ValueError("control sequence length differs from the horizon")
        per_time = [[b[t] for b in per_agent] for t in range(T)]
        return propagate_blocks(self.scenario.prior_cov, self.model.A, self.model.W, per_time)

    def gain(self, agents: Iterable[Agent]) -> float:
        key = tuple(sorted(agents))
        value = self._values.get(key)
        if value is not None:
            return value
        if not key or self.scenario.horizon == 0:
            value = 0.0
        else:
            achieved = raw_objective(self.scenario.objective, self.covariances(key))
            value = self.baseline - achieved
        with self._lock:
            self._values.setdefault(key, value)
            return self._values[key]

    def value(self, plans: Mapping[int, ControlSeq]) -> float:
        return self.gain((i, tuple(seq)) for i, seq in plans.items())


def evaluator_for(scenario: Scenario) -> Evaluator:
    """Shared evaluator (and cache) attached to a scenario object."""
    ev = scenario.__dict__.get("_evaluator")
    if ev is None:
        ev = Evaluator(scenario)
        object.__setattr__(scenario, "_evaluator", ev)
    return ev


def info_gain(scenario: Scenario, active_set: Iterable[int], plans: Mapping[int, ControlSeq]) -> float:
    """Reduction of the cost objective achieved by ``active_set`` executing ``plans``."""
    active = sorted(set(active_set))
    missing = [i for i in active if i not in plans]
    if missing:
        raise KeyError(f"no plan for robots {missing}")
    return evaluator_for(scenario).value(restrict(plans, active))


class SetFunctionView:
    """The information gain as a set function of the active robots, plans held fixed.

    Subsets are addressed either as iterables of robot ids or as bitmasks over
    ``ground`` (bit ``k`` is robot ``ground[k]``).
    """

    def __init__(self, scenario: Scenario, plans: Mapping[int, ControlSeq]):
        self.scenario = scenario
        self.plans: PlanSet = {i: tuple(seq) for i, seq in plans.items()}
        self.ground: tuple[int, ...] = tuple(sorted(self.plans))
        if len(self.ground) > 64:
            raise ValueError("at most 64 robots")
        self._index = {r: k for k, r in enumerate(self.ground)}
        self._evaluator = evaluator_for(scenario)
        self._memo: dict[int, float] = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return len(self.ground)

    def mask_of(self, robots: Iterable[int]) -> int:
        mask = 0
        for r in robots:
            mask |= 1 << self._index[r]
        return mask

    def robots_of(self, mask: int) -> frozenset[int]:
        return frozenset(r for k, r in enumerate(self.ground) if mask >> k & 1)

    def value_mask(self, mask: int) -> float:
        with self._lock:
            if mask in self._memo:
                return self._memo[mask]
        if mask == 0:
            value = 0.0
        else:
            value = self._evaluator.value(restrict(self.plans, self.robots_of(mask)))
        with self._lock:
            return self._memo.setdefault(mask, value)

    def __call__(self, robots: Iterable[int]) -> float:
        return self.value_mask(self.mask_of(robots))


def as_set_function(scenario: Scenario, plans: Mapping[int, ControlSeq]) -> SetFunctionView:
    missing = set(scenario.robot_ids) - set(plans)
    if missing:
        raise KeyError(f"plans must cover every robot; missing {sorted(missing)}")
    return SetFunctionView(scenario, plans)
