import numpy as np
import pytest

from localis.function_space import make_grid
from localis.group_core import euclidean, heisenberg
from localis.operator_lab import WindowSpec
from localis.representation import RepParams


@pytest.fixture(scope="session")
def egrid():
    return make_grid(euclidean(1), 0.0625, 8)


@pytest.fixture(scope="session")
def ewindow(egrid):
    return WindowSpec(egrid, 1.0)


@pytest.fixture(scope="session")
def eparams(egrid):
    return RepParams(egrid)


@pytest.fixture(scope="session")
def hgrid():
    """The coarse 24^3 Heisenberg grid."""
    return make_grid(heisenberg(1), (0.125, 0.5, 0.5), (1.5, 6.0, 6.0))


@pytest.fixture(scope="session")
def hgrid_small():
    """16 x 8 x 8 Heisenberg grid; the centre spacing h_x h_y / 2 keeps it closed under lattice shifts."""
    return make_grid(heisenberg(1), (0.125, 0.5, 0.5), (1.0, 2.0, 2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
