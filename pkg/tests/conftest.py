import numpy as np
import pytest

from esoreg import SimConfig, example_model, run
from esoreg.analysis import sample_attractor
from esoreg.design import design_gains


@pytest.fixture(scope="session")
def model():
    return example_model()


@pytest.fixture(scope="session")
def attractor(model):
    return sample_attractor(model)


@pytest.fixture(scope="session")
def gains(model, attractor):
    g, _ = design_gains(model, ell=10, kappa=30, attractor=attractor)
    return g


@pytest.fixture(scope="session")
def headline(model, gains):
    return run(model, gains, SimConfig(rho=(0.2,)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
