import math

import numpy as np
import pytest

from rig.scenario import PlannerConfig, PlannerMode, Scenario


def make_scenario(
    robots=((20.0, 14.0, math.pi / 2), (26.0, 20.0, math.pi)),
    targets=((20.0, 20.0), (23.0, 22.0)),
    horizon=2,
    controls=((1.0, 0.0), (1.0, 1.0), (1.0, -1.0)),
    mode=PlannerMode.EXHAUSTIVE,
    **kw,
):
    mean = np.zeros(4 * len(targets))
    for m, (x, y) in enumerate(targets):
        mean[4 * m : 4 * m + 2] = (x, y)
    cov = np.diag(np.tile([2.0, 2.0, 0.1, 0.1], len(targets)))
    return Scenario(
        robots=robots,
        prior_mean=mean,
        prior_cov=cov,
        controls=controls,
        horizon=horizon,
        planner=PlannerConfig(mode),
        **kw,
    )


@pytest.fixture
def scenario():
    return make_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
