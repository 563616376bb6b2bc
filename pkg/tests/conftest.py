import numpy as np
import pytest

from solitonlab.grid import Grid
from solitonlab.ground_state import Nonlinearity, solve_base_profile


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity(3.0, 1.0, 1)


@pytest.fixture(scope="session")
def sech_base(cubic):
    return solve_base_profile(cubic)


@pytest.fixture(scope="session")
def grid80():
    return Grid(1, 4096, 80.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
