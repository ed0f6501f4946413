import numpy as np
import pytest

from fracheat.grids import SpaceGrid
from fracheat.spectral import assemble_operator, eigendecompose


def build_spectrum(s=0.5, n=256, a=-1.0, b=1.0):
    return eigendecompose(assemble_operator(s, SpaceGrid(a, b, n)))


@pytest.fixture(scope="session")
def sp256():
    return build_spectrum(0.5, 256)


@pytest.fixture(scope="session")
def sp64():
    return build_spectrum(0.5, 64)


@pytest.fixture(scope="session")
def sp48_075():
    return build_spectrum(0.75, 48)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
