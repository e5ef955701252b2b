import numpy as np
import pytest

from discal.fem import FunctionSpace, ScenarioConfig, assemble_space
from discal.workflows import build_scenario, generate_calibration_data


@pytest.fixture(scope="session")
def bundle_1d():
    """Stationary 1D scenario at a small desk size, shared read-only."""
    return build_scenario(ScenarioConfig(problem="stationary-1d", n_space=33))


@pytest.fixture(scope="session")
def dataset_1d(bundle_1d):
    return generate_calibration_data(bundle_1d, n_data=2, seed=0)


@pytest.fixture(scope="session")
def bundle_transient():
    return build_scenario(
        ScenarioConfig(problem="transient-1d", n_space=25, n_time=16)
    )


@pytest.fixture(scope="session")
def dataset_transient(bundle_transient):
    return generate_calibration_data(bundle_transient, n_data=2, seed=0)


@pytest.fixture(scope="session")
def bundle_2d():
    return build_scenario(ScenarioConfig(problem="stationary-2d", n_space=9))


def make_space(n):
    """Small stationary 1D space."""
    return assemble_space(ScenarioConfig(problem="stationary-1d", n_space=n))


def identity_space(n):
    """A space with identity mass (lumped unit weights) and zero stiffness."""
    return FunctionSpace(
        nodes=np.linspace(0, 1, n)[:, None],
        dim=1,
        mass_s=np.eye(n),
        stiffness_s=np.zeros((n, n)),
    )
