import numpy as np
import pytest

from nlslab.grid import Grid
from nlslab.groundstate import solve_ground_state


@pytest.fixture(scope="session")
def gs_1d_cubic():
    """d=1, alpha=2 ground state sqrt(2) sech(x) on a production-size grid."""
    grid = Grid(1, "cartesian", n=1024, L=20.0)
    return solve_ground_state(1, 2.0, grid)


@pytest.fixture(scope="session")
def gs_1d_quintic():
    grid = Grid(1, "cartesian", n=1024, L=20.0)
    return solve_ground_state(1, 4.0, grid)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
