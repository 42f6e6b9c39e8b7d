import numpy as np
import pytest

from heisenframe.grid import TorusGrid, window_preset


@pytest.fixture(scope="session")
def box():
    return window_preset("box", 4096, (0.0, 1.0))


@pytest.fixture(scope="session")
def halfbox():
    return window_preset("half-box-sqrt2", 4096, (0.0, 1.0))


@pytest.fixture(scope="session")
def gaussian():
    return window_preset("gaussian", 4096, (-8.0, 8.0))


@pytest.fixture(scope="session")
def hat():
    return window_preset("hat", 4096, (0.0, 1.0))


@pytest.fixture(scope="session")
def grid512():
    return TorusGrid.midpoint(512)


@pytest.fixture(scope="session")
def grid128():
    return TorusGrid.midpoint(128)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
