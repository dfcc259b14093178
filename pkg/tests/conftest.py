import numpy as np
import pytest

from modlab.grid import Field, make_grid


@pytest.fixture
def grid1d():
    return make_grid(1, 256, 64 * np.pi)


@pytest.fixture
def wide1d():
    # wide band: spectral tails of unit Gaussians sit below 1e-12
    return make_grid(1, 1024, 64 * np.pi)


@pytest.fixture
def grid3d():
    return make_grid(3, 16, 8 * np.pi)


def gaussian_field(grid, width=1.0, amplitude=1.0):
    r_sq = sum(x**2 for x in grid.coords())
    return Field(grid, amplitude * np.exp(-r_sq / (2.0 * width**2)).astype(complex))


def complex_noise(grid, seed):
    rng = np.random.default_rng(seed)
    return Field(
        grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    )
