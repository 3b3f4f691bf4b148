import numpy as np
import pytest

from pulse_squeeze.devices import GaussianPump, OpoParams, build_opo, default_opo_grid
from pulse_squeeze.grids import TemporalGrid, gaussian_mode


@pytest.fixture(scope="session")
def grid():
    """Standard cavity-unit window at module-test resolution."""
    return default_opo_grid(1.0, 512)


@pytest.fixture(scope="session")
def u_mode(grid):
    return gaussian_mode(grid, 0.0, 1.0)


@pytest.fixture(scope="session")
def opo_kernels(grid):
    """A representative pumped cavity: detuned, moderate gain."""
    return build_opo(OpoParams(0.2, 1.0, GaussianPump(1.2, 0.0, 0.3)), grid)


@pytest.fixture(scope="session")
def freq_grid():
    return TemporalGrid(-8.0, 8.0, 256)


def random_mode(grid, rng, envelope_center=0.0, envelope_width=6.0):
    """Normalized random complex mode localized inside the grid."""
    from pulse_squeeze.grids import ModeFunction, normalize

    raw = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    raw *= np.exp(-((grid.points - envelope_center) ** 2) / (2 * envelope_width**2))
    mode, _ = normalize(ModeFunction(grid, raw))
    return mode
