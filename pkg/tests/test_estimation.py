import numpy as np
import pytest

from rig.errors import DimensionError, IllConditionedUpdateError
from rig.estimation import (
    GaussianBelief,
    TargetModel,
    clamp_psd,
    information_update,
    joseph_update,
    kf_predict,
    kf_update,
    propagate_blocks,
    riccati_propagate,
)
from rig.models import RobotState, SensorParams, target_transition


def random_spd(rng, n, cond=100.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * np.geomspace(1.0, 1.0 / cond, n)) @ q.T


def test_joseph_matches_information_form(rng):
    for _ in range(200):
        n, m = int(rng.integers(2, 9)), int(rng.integers(1, 5))
        P, V = random_spd(rng, n), random_spd(rng, m, cond=10.0)
        H = rng.normal(size=(m, n))
        _, post = joseph_update(P, H, V)
        ref = information_update(P, H, V)
        assert np.linalg.norm(post - ref) <= 1e-8 * np.linalg.norm(ref)


def test_update_with_measurement_moves_mean_toward_it():
    b = GaussianBelief(np.zeros(2), np.eye(2))
    out = kf_update(b, np.eye(2), 0.01 * np.eye(2), z=np.array([1.0, -1.0]))
    assert out.mean == pytest.approx([1 / 1.01, -1 / 1.01])
    assert np.all(np.diag(out.cov) < 1.0)


def test_empty_measurement_is_identity():
    b = GaussianBelief(np.ones(4), np.eye(4))
    assert kf_update(b, np.zeros((0, 4)), np.zeros((0, 0))) is b


def test_predict_applies_dynamics():
    A, W = target_transition(0.5, 0.001, 1)
    b = kf_predict(GaussianBelief([0.0, 0.0, 1.0, 2.0], np.eye(4)), A, W)
    assert b.mean == pytest.approx([0.5, 1.0, 1.0, 2.0])
    assert np.allclose(b.cov, A @ A.T + W)


def test_dimension_checks():
    with pytest.raises(DimensionError):
        GaussianBelief(np.zeros(3), np.eye(2))
    with pytest.raises(DimensionError):
        kf_update(GaussianBelief(np.zeros(2), np.eye(2)), np.ones((1, 3)), np.eye(1))


def test_ill_conditioned_innovation_raises():
    # two identical noise-free rows make the innovation covariance singular
    H = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(IllConditionedUpdateError):
        joseph_update(np.eye(2), H, 1e-20 * np.eye(2))


def test_clamp_psd_floors_negative_eigenvalues():
    bad = np.array([[1.0, 0.0], [0.0, -1e-12]])
    out = clamp_psd(bad)
    assert np.all(np.linalg.eigvalsh(out) >= 0)
    good = np.eye(3)
    assert clamp_psd(good) is not None and np.array_equal(clamp_psd(good), good)


def test_riccati_without_robots_is_pure_prediction():
    A, W = target_transition(0.5, 0.001, 1)
    model = TargetModel(A, W, np.array([5.0, 5.0, 0.0, 0.0]))
    covs = riccati_propagate(np.eye(4), [], model, SensorParams(), horizon=3)
    P = np.eye(4)
    for c in covs:
        P = A @ P @ A.T + W
        assert np.allclose(c, P)


def test_riccati_observation_shrinks_covariance():
    A, W = target_transition(0.5, 0.001, 1)
    model = TargetModel(A, W, np.array([5.0, 0.0, 0.0, 0.0]))
    traj = [RobotState(0.0, 0.0, 0.0)] * 2
    seen = riccati_propagate(np.eye(4), [traj], model, SensorParams())
    blind = riccati_propagate(np.eye(4), [], model, SensorParams(), horizon=2)
    for a, b in zip(seen, blind):
        assert np.linalg.det(a) < np.linalg.det(b)


def test_riccati_requires_horizon_without_robots():
    A, W = target_transition(0.5, 0.001, 1)
    with pytest.raises(ValueError):
        riccati_propagate(np.eye(4), [], TargetModel(A, W, np.zeros(4)), SensorParams())


def test_predicted_mean_is_memoized_power():
    A, W = target_transition(0.5, 0.001, 1)
    model = TargetModel(A, W, np.array([0.0, 0.0, 1.0, -1.0]))
    assert model.predicted_mean(4) == pytest.approx([2.0, -2.0, 1.0, -1.0])
    assert model.predicted_mean(4) is model.predicted_mean(4)


def test_propagate_blocks_length():
    A, W = target_transition(0.5, 0.0, 1)
    assert len(propagate_blocks(np.eye(4), A, W, [[], [], []])) == 3
