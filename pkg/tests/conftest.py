import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from beliefreach.grids import Grid
from beliefreach.humans import ControlGrid, PolicyModel
from beliefreach.scenario import Scenario, SolverOptions, load_fixture


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_goal_model():
    return PolicyModel.gaussian_goal(
        goals=[(2.0, 2.0), (2.0, -2.0)],
        sigmas=[np.pi / 4, np.pi / 4],
        speed=0.6,
    )


@pytest.fixture
def rational_or_random_model():
    return PolicyModel.straight_or_random(sigma=0.1, speed=0.6)


@pytest.fixture
def control_grid():
    return ControlGrid(72)


def small_scenario(**overrides) -> Scenario:
    """Coarse two-goal scenario for fast solver-backed unit tests."""
    base = dict(
        name="unit",
        seed=99,
        model=PolicyModel.gaussian_goal(
            goals=[(1.5, 1.5), (1.5, -1.5)], sigmas=[np.pi / 4, np.pi / 4], speed=0.6
        ),
        start=(0.0, 0.0),
        prior=(0.5, 0.5),
        gamma=1.0,
        intrinsic_change="zero",
        control_count=36,
        human_grid=Grid((-1.5, -1.5), (1.5, 1.5), (31, 31)),
        belief_axis=(0.001, 0.999, 15),
        deltas=(0.0, 0.1),
        epsilon_mass=0.95,
        horizon=1.0,
        snapshot_dt=0.1,
        particles=20_000,
        init_radius=None,
        solver=SolverOptions(scheme=2, time_integrator="rk2"),
    )
    base.update(overrides)
    return Scenario(**base)


@pytest.fixture
def unit_scenario():
    return small_scenario()


@pytest.fixture(scope="session")
def prediction_fixture():
    return load_fixture("two_goal_prediction")


@pytest.fixture(scope="session")
def nav_fixture():
    return load_fixture("misspecified_goal_nav")


@pytest.fixture(scope="session")
def analysis_fixture():
    return load_fixture("irrational_human_analysis")


# ---------------------------------------------------------------------------
# Expensive artifacts shared between the predictor tests and the acceptance
# gate; computed once per session.
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def naive_tube(prediction_fixture):
    from beliefreach.predictors import predict_naive

    return predict_naive(prediction_fixture)


@pytest.fixture(scope="session")
def family_tubes(prediction_fixture):
    from beliefreach.predictors import predict_ba_frs_family

    return predict_ba_frs_family(prediction_fixture)


@pytest.fixture(scope="session")
def bayes_tube(prediction_fixture):
    from beliefreach.predictors import predict_bayes

    return predict_bayes(prediction_fixture)


@pytest.fixture(scope="session")
def analysis_report(analysis_fixture):
    from beliefreach.analysis import analyze_scenario

    return analyze_scenario(analysis_fixture)
