"""Scenario description shared by the planners, the oracle and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError
from .estimation import TargetModel
from .models import (
    DEFAULT_CONTROLS,
    TARGET_DIM,
    ControlInput,
    RobotState,
    SensorParams,
    target_transition,
)


class ObjectiveKind(str, Enum):
    LOGDET = "logdet"
    TRACE = "trace"


class PlannerMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"


@dataclass(frozen=True)
class PlannerConfig:
    mode: PlannerMode = PlannerMode.GREEDY
    max_expansions: int = 200_000


@dataclass(frozen=True, eq=False)
class Scenario:
    """Team, targets, sensing and run parameters for one planning problem.

    Robot ids are indices into ``robots``.  All lengths are meters, angles
    radians, times seconds.
    """

    robots: tuple[RobotState, ...]
    prior_mean: np.ndarray
    prior_cov: np.ndarray
    sensor: SensorParams = field(default_factory=SensorParams)
    controls: tuple[ControlInput, ...] = DEFAULT_CONTROLS
    tau: float = 0.5
    horizon: int = 25
    q: float = 0.001
    objective: ObjectiveKind = ObjectiveKind.LOGDET
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    alpha: int = 0
    env_size: float = 64.0
    total_steps: int = 500
    paper_literal_unicycle: bool = False
    permanent_removal: bool = False
    robot_order: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        robots = tuple(RobotState(*map(float, r)) for r in self.robots)
        object.__setattr__(self, "robots", robots)
        mean = np.asarray(self.prior_mean, dtype=float).reshape(-1)
        cov = np.asarray(self.prior_cov, dtype=float)
        object.__setattr__(self, "prior_mean", mean)
        object.__setattr__(self, "prior_cov", cov)
        object.__setattr__(self, "controls", tuple(ControlInput(*u) for u in self.controls))
        if mean.size == 0 or mean.size % TARGET_DIM:
            raise ConfigError("prior mean must stack 4-dimensional target states")
        if cov.shape != (mean.size, mean.size):
            raise ConfigError("prior covariance shape does not match the prior mean")
        if not self.controls:
            raise ConfigError("control set is empty")
        if self.horizon < 0 or self.tau <= 0 or self.q < 0:
            raise ConfigError("need horizon >= 0, tau > 0, q >= 0")
        if not 0 <= self.alpha <= len(robots):
            raise ConfigError("alpha must lie in [0, |V|]")
        if len(robots) > 64:
            raise ConfigError("at most 64 robots are supported")
        if self.robot_order is not None and sorted(self.robot_order) != list(range(len(robots))):
            raise ConfigError("robot_order must be a permutation of the robot ids")

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @property
    def n_targets(self) -> int:
        return self.prior_mean.size // TARGET_DIM

    @property
    def robot_ids(self) -> tuple[int, ...]:
        return tuple(range(self.n_robots))

    def target_model(self) -> TargetModel:
        A, W = target_transition(self.tau, self.q, self.n_targets)
        return TargetModel(A, W, self.prior_mean)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def validate_for_simulation(self) -> None:
        """Extra invariants required before a closed-loop run."""
        if self.horizon < 1 or self.total_steps % self.horizon:
            raise ConfigError("total_steps must be a positive multiple of the horizon")
        pos = self.prior_mean.reshape(-1, TARGET_DIM)[:, :2]
        for r in self.robots:
            if not (0 <= r.x1 <= self.env_size and 0 <= r.x2 <= self.env_size):
                raise ConfigError(f"robot {r} starts outside the environment")
            if np.any(np.hypot(pos[:, 0] - r.x1, pos[:, 1] - r.x2) == 0):
                raise ConfigError("robot coincides with a target prior mean")
        if not np.all((pos >= 0) & (pos <= self.env_size)):
            raise ConfigError("target prior mean outside the environment")
