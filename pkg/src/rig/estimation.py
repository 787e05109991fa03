"""Kalman filtering and open-loop covariance (Riccati) propagation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionError, IllConditionedUpdateError
from .models import RobotState, SensorParams, StackedObservation, stack_blocks, stacked_observation

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12
PSD_WARN = 1e-9


def symmetrize(cov: np.ndarray) -> np.ndarray:
    return 0.5 * (cov + cov.T)


def clamp_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and floor negative eigenvalues at zero."""
    cov = symmetrize(cov)
    try:
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() >= 0:
        return cov
    if vals.min() < -PSD_WARN:
        log.warning("covariance had eigenvalue %.3g; clamped to 0", vals.min())
    vals = np.clip(vals, 0.0, None)
    return symmetrize((vecs * vals) @ vecs.T)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(f"cov shape {cov.shape} does not match mean size {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def kf_predict(belief: GaussianBelief, A: np.ndarray, W: np.ndarray) -> GaussianBelief:
    A = np.atleast_2d(A)
    W = np.atleast_2d(W)
    if A.shape != (belief.dim, belief.dim) or W.shape != A.shape:
        raise DimensionError("transition/noise dimensions do not match the belief")
    return GaussianBelief(A @ belief.mean, clamp_psd(A @ belief.cov @ A.T + W))


def joseph_update(cov: np.ndarray, H: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kalman gain and Joseph-form posterior covariance."""
    S = symmetrize(H @ cov @ H.T + V)
    if np.linalg.cond(S) > MAX_CONDITION:
        raise IllConditionedUpdateError("innovation covariance is numerically singular")
    K = np.linalg.solve(S, H @ cov).T
    I_KH = np.eye(cov.shape[0]) - K @ H
    post = I_KH @ cov @ I_KH.T + K @ V @ K.T
    return K, clamp_psd(post)


def kf_update(
    belief: GaussianBelief,
    H: np.ndarray,
    V: np.ndarray,
    z: np.ndarray | None = None,
    *,
    innovation: np.ndarray | None = None,
) -> GaussianBelief:
    """Kalman measurement update.

    Either the raw measurement ``z`` (linear model ``z = H y + v``) or a
    precomputed ``innovation`` may be supplied; the latter is what an EKF with
    a nonlinear measurement function passes in.  With neither, only the
    covariance is meaningful and the mean is returned unchanged.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] == 0:
        return belief
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if H.shape[1] != belief.dim or V.shape != (H.shape[0], H.shape[0]):
        raise DimensionError("measurement model dimensions do not match")
    K, cov = joseph_update(belief.cov, H, V)
    if innovation is None and z is not None:
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size != H.shape[0]:
            raise DimensionError("measurement length does not match H")
        innovation = z - H @ belief.mean
    mean = belief.mean if innovation is None else belief.mean + K @ innovation
    return GaussianBelief(mean, cov)


def information_update(cov: np.ndarray, H: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Posterior covariance in information form, ``(cov^-1 + H^T V^-1 H)^-1``."""
    info = np.linalg.inv(cov) + H.T @ np.linalg.solve(V, H)
    return symmetrize(np.linalg.inv(info))


@dataclass(frozen=True, eq=False)
class TargetModel:
    """Linear target process plus the prior used for planning-time linearization."""

    A: np.ndarray
    W: np.ndarray
    prior_mean: np.ndarray

    @cached_property
    def _means(self) -> list[np.ndarray]:
        return [np.asarray(self.prior_mean, dtype=float)]

    def predicted_mean(self, t: int) -> np.ndarray:
        """``A^t`` applied to the prior mean (memoized)."""
        means = self._means
        while len(means) <= t:
            means.append(self.A @ means[-1])
        return means[t]


def propagate_blocks(
    prior_cov: np.ndarray,
    A: np.ndarray,
    W: np.ndarray,
    blocks: Sequence[Sequence[StackedObservation]],
) -> list[np.ndarray]:
    """Riccati recursion given each time step's observation blocks.

    ``blocks[t]`` holds the per-robot observations taken at step ``t + 1``.
    """
    cov = np.asarray(prior_cov, dtype=float)
    dim = cov.shape[0]
    out = []
    for step_blocks in blocks:
        cov = clamp_psd(A @ cov @ A.T + W)
        H, V = stack_blocks(step_blocks, dim)
        if H.shape[0]:
            _, cov = joseph_update(cov, H, V)
        out.append(cov)
    return out


def observation_blocks(
    trajectory: Sequence[RobotState], model: TargetModel, params: SensorParams
) -> list[StackedObservation]:
    """One robot's linearized observations along its pose trajectory (poses at t = 1..T)."""
    return [
        stacked_observation(pose, model.predicted_mean(t), params)
        for t, pose in enumerate(trajectory, start=1)
    ]


def riccati_propagate(
    prior_cov: np.ndarray,
    robot_trajectories: Sequence[Sequence[RobotState]],
    target_model: TargetModel,
    sensor_params: SensorParams,
    horizon: int | None = None,
) -> list[np.ndarray]:
    """Covariances Sigma_1..Sigma_T when the given robots observe along their trajectories.

    Jacobians are evaluated at the prior mean pushed through the target
    dynamics; measurement realizations never enter.  With no robots the
    horizon must be passed explicitly.
    """
    lengths = {len(tr) for tr in robot_trajectories}
    if len(lengths) > 1:
        raise DimensionError("robot trajectories differ in length")
    if lengths:
        T = lengths.pop()
        if horizon is not None and horizon != T:
            raise DimensionError("horizon does not match trajectory length")
    elif horizon is None:
        raise ValueError("horizon is required when no robots are active")
    else:
        T = horizon
    per_robot = [observation_blocks(tr, target_model, sensor_params) for tr in robot_trajectories]
    per_time = [[obs[t] for obs in per_robot] for t in range(T)]
    return propagate_blocks(prior_cov, target_model.A, target_model.W, per_time)
