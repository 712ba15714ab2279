import numpy as np
import pytest
from scipy import ndimage

from epx import Field, Grid2D


@pytest.fixture
def unit33():
    return Grid2D(33, 33)


@pytest.fixture
def ones33(unit33):
    return Field.full(unit33, 1.0)


def clamped_random(grid: Grid2D, rng: np.random.Generator, amplitude: float = 1.0) -> Field:
    """Smooth seeded field vanishing with its gradient on the boundary."""
    X, Y = grid.meshgrid()
    xi = (X - grid.x0) / (grid.x1 - grid.x0)
    eta = (Y - grid.y0) / (grid.y1 - grid.y0)
    mask = (xi * (1 - xi) * eta * (1 - eta)) ** 2
    rough = rng.standard_normal(grid.shape)
    smooth = ndimage.gaussian_filter(rough, sigma=max(2.0, grid.nx / 16))
    vals = mask * smooth
    return Field(grid, amplitude * vals / np.abs(vals).max())


def dyadic_orders(errors) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])
