import numpy as np
import pytest

from eulerlab.spectral_core import Grid2D, RealField, remove_nyquist


def random_zero_mean(grid: Grid2D, rng: np.random.Generator, decay: float = 1.0) -> RealField:
    """Random field with zero mean, no Nyquist content and a power-law spectrum."""
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0
    F = np.fft.fft2(rng.standard_normal((grid.n, grid.n))) * k2 ** (-decay / 2)
    F[0, 0] = 0.0
    field = RealField(grid, np.fft.ifft2(F).real)
    return remove_nyquist(field)


def single_mode(grid: Grid2D, kx: int, ky: int, phase: float = 0.3) -> RealField:
    k = 2 * np.pi / grid.box_length
    return RealField.from_function(grid, lambda x, y: np.cos(k * (kx * x + ky * y) + phase))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
