import numpy as np
import pytest

from dnls3.grid import Grid, State


def random_state(grid: Grid, rng: np.random.Generator, smooth: bool = True, scale: float = 1.0) -> State:
    """Seeded random state; optionally smoothed so derivatives stay O(1)."""
    shape = (3, grid.d, *grid.shape)
    u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if smooth:
        u = grid.ifft(grid.fft(u) / (1.0 + grid.k2) ** 2)
    return State(grid, scale * u)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid1d():
    return Grid(64, 2 * np.pi)


@pytest.fixture
def grid1d_box():
    return Grid(256, 40.0)


@pytest.fixture
def grid2d():
    return Grid((32, 32), (20.0, 20.0))
