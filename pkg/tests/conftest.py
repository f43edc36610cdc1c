import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wsnforest.levels import ThresholdTable
from wsnforest.simulation import SimulationConfig

settings.register_profile(
    "ci",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def default_thresholds():
    return ThresholdTable.default()


@pytest.fixture(scope="session")
def small_set1_config():
    return SimulationConfig(experiment_set=1, seed=123, steps=20, runs=2)


@pytest.fixture(scope="session")
def quiet_set1_config():
    """Set-1 config with failures and breakdowns effectively disabled."""
    return SimulationConfig(
        experiment_set=1, seed=9, steps=20, runs=1,
        failure_rate_denominator=1e12, sensor_breakdown_prob=0.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
