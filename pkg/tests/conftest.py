import numpy as np
import pytest

from steinerlab.bodies import QuadratureSpec


@pytest.fixture
def q2():
    return QuadratureSpec(grid_resolution=256)


@pytest.fixture
def q3():
    return QuadratureSpec(grid_resolution=64)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
