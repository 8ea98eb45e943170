import numpy as np
import pytest

from stripwaves.grid import SpectralGrid
from stripwaves.params import ScaleParams


@pytest.fixture
def grid():
    return SpectralGrid(2 * np.pi, 2 * np.pi, 32, 16, Nz=16)


@pytest.fixture
def params():
    return ScaleParams.standard(0.1, 0.5)


@pytest.fixture
def params_quarter():
    return ScaleParams.standard(0.25, 0.5)
