import numpy as np
import pytest

from isar_rcs import ImageGrid, IsarOperator, MeasurementGeometry, default_geometry


@pytest.fixture(scope="session")
def geom():
    return default_geometry()


@pytest.fixture(scope="session")
def grid():
    return ImageGrid.square(1.0, 0.01)


@pytest.fixture(scope="session")
def op(grid, geom):
    return IsarOperator(grid, geom)


@pytest.fixture(scope="session")
def small_geom():
    return MeasurementGeometry.uniform(14e9, 16e9, 5, -4.0, 4.0, 7)


@pytest.fixture(scope="session")
def small_grid():
    return ImageGrid.square(0.08, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def crandn(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
