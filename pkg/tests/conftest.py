import pytest

from pseudoproc import (SpaceTimeGrid, PseudoGradientSpec, isotropic_symbol,
                        constant_drift, TestFunction)

TestFunction.__test__ = False  # data carrier, not a pytest class


@pytest.fixture(scope="session")
def default_grid():
    return SpaceTimeGrid(1, 40.0, 256, 1.0, 16)


@pytest.fixture(scope="session")
def small_grid():
    # desk-scale shrunk further for solver-heavy unit tests
    return SpaceTimeGrid(1, 20.0, 64, 1.0, 8)


@pytest.fixture(scope="session")
def sym():
    return isotropic_symbol(1.5, 1.0, 1)


@pytest.fixture(scope="session")
def pg():
    return PseudoGradientSpec(beta=0.5, dim=1)


@pytest.fixture(scope="session")
def unit_drift():
    return constant_drift([1.0])
