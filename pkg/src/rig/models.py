"""Robot, target and sensor models for planar multi-target tracking.

Robots are unicycles on SE(2) with a finite set of (speed, turn-rate)
controls.  Targets are independent double integrators in the plane and are
stacked into one joint state of dimension ``4 * M``.  Each robot carries a
range-bearing sensor with limited range and field of view whose noise grows
linearly with range and with bearing magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidStateError, SingularGeometryError

#: Lower clamp on the noise ramp, keeps the measurement covariance invertible.
NOISE_FLOOR = 0.1

TARGET_DIM = 4


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def sinc(x: float) -> float:
    """Unnormalized sinc, ``sin(x) / x`` with ``sinc(0) = 1``."""
    if x == 0.0:
        return 1.0
    return math.sin(x) / x


class RobotState(NamedTuple):
    x1: float
    x2: float
    theta: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


class ControlInput(NamedTuple):
    nu: float
    omega: float


@dataclass(frozen=True)
class SensorParams:
    """Range-bearing sensor footprint and noise levels.

    ``psi`` is the full field-of-view angle and ``sigma_r`` / ``sigma_b`` the
    standard deviations reached at the edge of the footprint (radians for
    angles throughout).
    """

    r_sense: float = 10.0
    psi: float = math.radians(94.0)
    sigma_r: float = 0.15
    sigma_b: float = math.radians(5.0)

    def __post_init__(self) -> None:
        if not self.r_sense > 0:
            raise ValueError("r_sense must be positive")
        if not 0 < self.psi <= 2 * math.pi + 1e-12:
            raise ValueError("psi must lie in (0, 2*pi]")
        if not (self.sigma_r > 0 and self.sigma_b > 0):
            raise ValueError("noise standard deviations must be positive")


#: Admissible controls used in the simulation study: speeds {1, 3} m/s,
#: turn rates {0, +-1, +-3} rad/s.
DEFAULT_CONTROLS: tuple[ControlInput, ...] = tuple(
    ControlInput(nu, om) for nu in (1.0, 3.0) for om in (0.0, -1.0, 1.0, -3.0, 3.0)
)


def _check_finite(*values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise InvalidStateError(f"non-finite input: {values}")


def unicycle_step(
    state: RobotState,
    u: ControlInput,
    tau: float,
    *,
    paper_literal: bool = False,
) -> RobotState:
    """Advance a unicycle by one sampling period with the exact sinc discretization.

    The displacement has length ``nu * tau * sinc(omega * tau / 2)`` along the
    mid-step heading.  ``paper_literal=True`` drops the ``tau`` factor from the
    displacement, reproducing the printed update formula verbatim.
    """
    _check_finite(*state, *u, tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    half = 0.5 * u.omega * tau
    length = u.nu * sinc(half)
    if not paper_literal:
        length *= tau
    heading = state.theta + half
    return RobotState(
        state.x1 + length * math.cos(heading),
        state.x2 + length * math.sin(heading),
        wrap_angle(state.theta + tau * u.omega),
    )


def rollout(
    state: RobotState,
    controls: Sequence[ControlInput],
    tau: float,
    *,
    paper_literal: bool = False,
    bounds: float | None = None,
) -> list[RobotState]:
    """Poses reached after each control; optionally clamped to ``[0, bounds]^2``."""
    poses = []
    for u in controls:
        state = unicycle_step(state, u, tau, paper_literal=paper_literal)
        if bounds is not None:
            state = RobotState(
                min(max(state.x1, 0.0), bounds), min(max(state.x2, 0.0), bounds), state.theta
            )
        poses.append(state)
    return poses


def target_transition(tau: float, q: float, n_targets: int) -> tuple[np.ndarray, np.ndarray]:
    """Joint double-integrator transition ``A`` and process-noise covariance ``W``."""
    if tau <= 0 or q < 0 or n_targets < 1:
        raise ValueError("need tau > 0, q >= 0, n_targets >= 1")
    eye2 = np.eye(2)
    a_block = np.block([[eye2, tau * eye2], [np.zeros((2, 2)), eye2]])
    w_block = q * np.block(
        [[tau**3 / 3.0 * eye2, tau**2 / 2.0 * eye2], [tau**2 / 2.0 * eye2, tau * eye2]]
    )
    eye_m = np.eye(n_targets)
    return np.kron(eye_m, a_block), np.kron(eye_m, w_block)


def _range_bearing(robot: RobotState, target: Sequence[float]) -> tuple[float, float]:
    dx = float(target[0]) - robot.x1
    dy = float(target[1]) - robot.x2
    _check_finite(dx, dy, robot.theta)
    r = math.hypot(dx, dy)
    if r == 0.0:
        raise SingularGeometryError("robot and target coincide")
    return r, wrap_angle(math.atan2(dy, dx) - robot.theta)


def in_footprint(r: float, bearing: float, params: SensorParams) -> bool:
    # closed at both the range and the field-of-view boundary
    return r <= params.r_sense and abs(bearing) <= 0.5 * params.psi


def observe(
    robot: RobotState, target: Sequence[float], params: SensorParams
) -> tuple[float, float] | None:
    """Noise-free (range, bearing) of one target, or ``None`` when outside the footprint."""
    r, bearing = _range_bearing(robot, target)
    if not in_footprint(r, bearing, params):
        return None
    return r, bearing


def measurement_jacobian(robot: RobotState, target: Sequence[float]) -> np.ndarray:
    """2x4 Jacobian of (range, bearing) with respect to one target's state."""
    r, bearing = _range_bearing(robot, target)
    dx = float(target[0]) - robot.x1
    dy = float(target[1]) - robot.x2
    phi = robot.theta + bearing
    return np.array(
        [
            [dx / r, dy / r, 0.0, 0.0],
            [-math.sin(phi) / r, math.cos(phi) / r, 0.0, 0.0],
        ]
    )


def noise_std(r: float, bearing: float, params: SensorParams) -> tuple[float, float]:
    """Range and bearing standard deviations, ramping linearly up to the footprint edge."""
    ramp_r = min(max(r / params.r_sense, NOISE_FLOOR), 1.0)
    ramp_b = min(max(abs(bearing) / (0.5 * params.psi), NOISE_FLOOR), 1.0)
    return params.sigma_r * ramp_r, params.sigma_b * ramp_b


class StackedObservation(NamedTuple):
    H: np.ndarray
    V: np.ndarray
    mask: tuple[int, ...]


def stacked_observation(
    robot: RobotState, joint_target: np.ndarray, params: SensorParams
) -> StackedObservation:
    """Linearized joint observation of every visible target by one robot.

    ``H`` has two rows per visible target and ``4 * M`` columns; ``V`` is the
    matching diagonal noise covariance and ``mask`` lists the visible target
    indices in increasing order.
    """
    joint_target = np.asarray(joint_target, dtype=float)
    n = joint_target.shape[0]
    if n % TARGET_DIM:
        raise ValueError("joint target dimension must be a multiple of 4")
    rows, variances, mask = [], [], []
    for m in range(n // TARGET_DIM):
        y = joint_target[TARGET_DIM * m : TARGET_DIM * (m + 1)]
        r, bearing = _range_bearing(robot, y)
        if not in_footprint(r, bearing, params):
            continue
        block = np.zeros((2, n))
        block[:, TARGET_DIM * m : TARGET_DIM * (m + 1)] = measurement_jacobian(robot, y)
        rows.append(block)
        sr, sb = noise_std(r, bearing, params)
        variances.extend((sr * sr, sb * sb))
        mask.append(m)
    if not rows:
        return StackedObservation(np.zeros((0, n)), np.zeros((0, 0)), ())
    return StackedObservation(np.vstack(rows), np.diag(variances), tuple(mask))


def stack_blocks(blocks: Iterable[StackedObservation], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate several robots' observations into one measurement model."""
    hs, vs = [], []
    for obs in blocks:
        if obs.H.shape[0]:
            hs.append(obs.H)
            vs.append(np.diag(obs.V))
    if not hs:
        return np.zeros((0, dim)), np.zeros((0, 0))
    return np.vstack(hs), np.diag(np.concatenate(vs))
