import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import fracvar as fv

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def line_grid():
    return fv.build_grid(1, 1.0, 32)


@pytest.fixture(scope="session")
def line_kt(line_grid):
    return fv.build_kernel_table(line_grid, fv.FracParams(0.4, 2.0), 4.0)


@pytest.fixture(scope="session")
def line_kt_p3(line_grid):
    return fv.build_kernel_table(line_grid, fv.FracParams(0.3, 3.0), 4.0)


@pytest.fixture(scope="session")
def plane_grid():
    return fv.build_grid(2, 1.0, 8)


@pytest.fixture(scope="session")
def plane_kt(plane_grid):
    return fv.build_kernel_table(plane_grid, fv.FracParams(0.5, 2.0), 4.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def bump(grid, center=0.0, width=0.25, amplitude=1.0):
    c = np.full(grid.dim, center, dtype=float) if np.isscalar(center) else np.asarray(center)
    d2 = ((grid.centers - c) ** 2).sum(axis=1)
    return fv.GridFunction(grid, amplitude * np.exp(-d2 / (2.0 * width**2)))
