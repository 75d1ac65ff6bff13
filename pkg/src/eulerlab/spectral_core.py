"""Periodic grids, real/spectral field containers and Fourier operators.

Coefficients follow the normalization ``f(x) = sum_k fhat(k) exp(i k.x)``, so
the zero-wavenumber coefficient is the mean of the field. Array axis 0 is the
x direction and axis 1 is y: ``values[i, j]`` is the sample at ``(x_i, y_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

Axis = Literal["x", "y"]

SYMMETRY_RTOL = 1e-10


class NonFiniteFieldError(ValueError):
    """Raised when a field contains NaN or infinite samples."""


class AsymmetricSpectrumError(ValueError):
    """Raised when coefficients are not the transform of a real field."""


def _first_bad_index(values: np.ndarray) -> tuple[int, ...] | None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size == 0:
        return None
    return tuple(int(i) for i in bad[0])


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on the square ``[0, L)^2``.

    Args:
        n: samples per axis, a power of two and at least 8.
        box_length: side length ``L`` of the box.
    """

    n: int
    box_length: float = 2.0 * np.pi

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"grid size must be an integer, got {n!r}")
        object.__setattr__(self, "n", int(n))
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        L = float(self.box_length)
        if not np.isfinite(L) or L <= 0:
            raise ValueError(f"box_length must be positive and finite, got {self.box_length!r}")
        object.__setattr__(self, "box_length", L)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @cached_property
    def coords(self) -> np.ndarray:
        """1D sample coordinates ``x_i = i L / n``."""
        return np.arange(self.n) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` with ``X[i, j] = x_i``, ``Y[i, j] = y_j``."""
        return np.meshgrid(self.coords, self.coords, indexing="ij")

    @cached_property
    def signed_indices(self) -> np.ndarray:
        """Signed integer frequencies in ``(-n/2, n/2]`` in FFT storage order."""
        j = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)
        j[self.n // 2] = self.n // 2
        return j

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers ``(2 pi / L) * j`` in FFT storage order."""
        return (2.0 * np.pi / self.box_length) * self.signed_indices

    @property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2.0 * np.pi / self.box_length

    @cached_property
    def k_squared(self) -> np.ndarray:
        k = self.wavenumbers
        return k[:, None] ** 2 + k[None, :] ** 2

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the full-layout lines where either signed index equals n/2."""
        j = self.signed_indices
        half = self.n // 2
        return (j[:, None] == half) | (j[None, :] == half)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Square 2/3 rule: keep ``max(|jx|, |jy|) <= n/3``."""
        j = np.abs(self.signed_indices)
        return np.maximum(j[:, None], j[None, :]) <= self.n / 3.0

    # rfft layout (axis 1 halved), used by the time integrator

    @cached_property
    def rfft_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """``(kx, ky)`` broadcastable to the ``(n, n//2 + 1)`` rfft layout."""
        kx = self.wavenumbers[:, None]
        ky = (2.0 * np.pi / self.box_length) * np.arange(self.n // 2 + 1)[None, :]
        return kx, ky

    @cached_property
    def rfft_nyquist_mask(self) -> np.ndarray:
        half = self.n // 2
        jx = self.signed_indices[:, None]
        jy = np.arange(half + 1)[None, :]
        return (jx == half) | (jy == half)

    @cached_property
    def rfft_dealias_mask(self) -> np.ndarray:
        jx = np.abs(self.signed_indices)[:, None]
        jy = np.arange(self.n // 2 + 1)[None, :]
        return np.maximum(jx, jy) <= self.n / 3.0


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples on a grid; the array is copied and made read-only."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        n = self.grid.n
        if values.shape != (n, n):
            raise ValueError(f"field shape {values.shape} does not match grid {n}x{n}")
        bad = _first_bad_index(values)
        if bad is not None:
            raise NonFiniteFieldError(f"non-finite sample {values[bad]!r} at index {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> RealField:
        return cls(grid, np.zeros((grid.n, grid.n)))

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> RealField:
        X, Y = grid.mesh()
        return cls(grid, func(X, Y))

    def mean(self) -> float:
        return float(self.values.mean())

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def __add__(self, other: RealField) -> RealField:
        _check_same_grid(self.grid, other.grid)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: RealField) -> RealField:
        _check_same_grid(self.grid, other.grid)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> RealField:
        return RealField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> RealField:
        return RealField(self.grid, -self.values)

    def shifted(self, di: int, dj: int) -> RealField:
        """Grid translation: the result at index (i, j) is the sample at (i - di, j - dj)."""
        return RealField(self.grid, np.roll(self.values, (di, dj), axis=(0, 1)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients in full ``n x n`` FFT storage order."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        n = self.grid.n
        if coeffs.shape != (n, n):
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {n}x{n}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def energy(self) -> float:
        """Sum of squared coefficient magnitudes (equals the mean of f**2)."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def symmetry_defect(self) -> float:
        """Relative max-norm distance from conjugate symmetry."""
        c = self.coeffs
        mirrored = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - mirrored)) / scale)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid2D
    x_component: RealField
    y_component: RealField

    def __post_init__(self):
        _check_same_grid(self.grid, self.x_component.grid)
        _check_same_grid(self.grid, self.y_component.grid)

    @classmethod
    def from_arrays(cls, grid: Grid2D, ux: np.ndarray, uy: np.ndarray) -> VectorField:
        return cls(grid, RealField(grid, ux), RealField(grid, uy))

    def __sub__(self, other: VectorField) -> VectorField:
        _check_same_grid(self.grid, other.grid)
        return VectorField(
            self.grid, self.x_component - other.x_component, self.y_component - other.y_component
        )

    def max_speed_component(self) -> float:
        return float(max(np.max(np.abs(self.x_component.values)), np.max(np.abs(self.y_component.values))))


def _check_same_grid(a: Grid2D, b: Grid2D) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def forward_transform(f: RealField) -> SpectralField:
    bad = _first_bad_index(f.values)
    if bad is not None:
        raise NonFiniteFieldError(f"non-finite sample at index {bad}")
    n = f.grid.n
    return SpectralField(f.grid, np.fft.fft2(f.values) / (n * n))


def inverse_transform(F: SpectralField) -> RealField:
    defect = F.symmetry_defect()
    if defect > SYMMETRY_RTOL:
        raise AsymmetricSpectrumError(
            f"coefficients are not conjugate-symmetric (relative defect {defect:.3e})"
        )
    n = F.grid.n
    return RealField(F.grid, np.fft.ifft2(F.coeffs).real * (n * n))


def spectral_derivative(F: SpectralField, axis: Axis) -> SpectralField:
    grid = F.grid
    k = np.where(grid.signed_indices == grid.n // 2, 0.0, grid.wavenumbers)
    if axis == "x":
        mult = 1j * k[:, None]
    elif axis == "y":
        mult = 1j * k[None, :]
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return SpectralField(grid, F.coeffs * mult)


def dealias(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0))


def remove_nyquist(f: RealField) -> RealField:
    """Drop the Nyquist lines, the modes that odd spectral operators cannot represent."""
    F = forward_transform(f)
    return inverse_transform(SpectralField(f.grid, np.where(f.grid.nyquist_mask, 0.0, F.coeffs)))


def fourier_shift(f: RealField, sx: float, sy: float) -> RealField:
    """Translate by a physical offset ``(sx, sy)`` using the exact Fourier phase.

    Nyquist lines are removed first because their shifted phase is not real.
    """
    grid = f.grid
    F = np.where(grid.nyquist_mask, 0.0, forward_transform(f).coeffs)
    k = grid.wavenumbers
    phase = np.exp(-1j * (k[:, None] * sx + k[None, :] * sy))
    return inverse_transform(SpectralField(grid, F * phase))
