"""Biot-Savart inversion and the pseudospectral RK4 integrator for 2D Euler.

The integrator keeps the vorticity in rfft coefficient form, so the mean
(zero-wavenumber coefficient) is carried exactly and never touched by the
advective right-hand side. Fields are restricted to the resolvable subspace
without Nyquist lines, on which the Biot-Savart multiplier is exact.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .norms import holder_seminorm, lp_norm, vector_l2_norm
from .spectral_core import Grid2D, RealField, VectorField

log = logging.getLogger(__name__)

VELOCITY_FLOOR = 1e-12
LEDGER_COLUMNS = ("t", "l1", "l2", "linf", "mean", "energy", "holder")


class CFLViolation(ValueError):
    """Requested time step exceeds the CFL bound of the current velocity."""


class NumericalInstability(RuntimeError):
    """Non-finite values appeared during time integration."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"non-finite vorticity detected at t = {t!r}")


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    cfl: float = 0.5
    dealias: bool = True
    conservation_check_every: int = 0
    samples_per_unit_time: int = 32
    holder_alpha: float | None = 0.5
    freeze: bool = False

    def __post_init__(self):
        if not (isinstance(self.cfl, (int, float)) and 0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end!r}")
        if int(self.conservation_check_every) != self.conservation_check_every or self.conservation_check_every < 0:
            raise ValueError("conservation_check_every must be a nonnegative integer")
        if int(self.samples_per_unit_time) != self.samples_per_unit_time or self.samples_per_unit_time < 1:
            raise ValueError("samples_per_unit_time must be a positive integer")
        if self.holder_alpha is not None and not 0.0 < self.holder_alpha < 1.0:
            raise ValueError(f"holder_alpha must lie in (0, 1), got {self.holder_alpha!r}")

    def sample_times(self) -> np.ndarray:
        m = max(1, math.ceil(self.t_end * self.samples_per_unit_time - 1e-9))
        times = self.t_end * np.arange(m + 1) / m
        times[-1] = self.t_end
        return times


class SpectralEuler:
    """Precomputed rfft-layout multipliers for one grid."""

    def __init__(self, grid: Grid2D, dealias: bool = True):
        self.grid = grid
        n = grid.n
        kx, ky = grid.rfft_wavenumbers
        nyq = grid.rfft_nyquist_mask
        self.kx = np.where(nyq, 0.0, kx)
        self.ky = np.where(nyq, 0.0, ky)
        k2 = (kx**2 + ky**2).astype(float)
        k2[0, 0] = 1.0
        self.inv_k2 = np.where(nyq, 0.0, 1.0 / k2)
        self.inv_k2[0, 0] = 0.0
        keep = grid.rfft_dealias_mask if dealias else np.ones_like(nyq)
        self.rhs_mask = keep & ~nyq
        self.rhs_mask[0, 0] = False
        self.resolvable = ~nyq
        self._n2 = float(n * n)

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(values) / self._n2

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        n = self.grid.n
        return np.fft.irfft2(coeffs * self._n2, s=(n, n))

    def project(self, coeffs: np.ndarray) -> np.ndarray:
        return np.where(self.resolvable, coeffs, 0.0)

    def velocity_hat(self, w_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        psi = w_hat * self.inv_k2
        return 1j * self.ky * psi, -1j * self.kx * psi

    def velocity(self, w_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ux_hat, uy_hat = self.velocity_hat(w_hat)
        return self.to_physical(ux_hat), self.to_physical(uy_hat)

    def rhs(self, w_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(-(u.grad) w)^, ux, uy``."""
        ux, uy = self.velocity(w_hat)
        wx = self.to_physical(1j * self.kx * w_hat)
        wy = self.to_physical(1j * self.ky * w_hat)
        adv = self.to_spectral(ux * wx + uy * wy)
        return np.where(self.rhs_mask, -adv, 0.0), ux, uy

    def velocity_gradient_max(self, w_hat: np.ndarray) -> float:
        """Grid maximum of the pointwise operator 2-norm of grad u."""
        ux_hat, uy_hat = self.velocity_hat(w_hat)
        a = self.to_physical(1j * self.kx * ux_hat)
        b = self.to_physical(1j * self.ky * ux_hat)
        c = self.to_physical(1j * self.kx * uy_hat)
        d = self.to_physical(1j * self.ky * uy_hat)
        fro2 = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
        return float(np.sqrt(np.max(0.5 * (fro2 + disc))))

    def rk4(self, w_hat: np.ndarray, dt: float, k1: np.ndarray | None = None) -> np.ndarray:
        if k1 is None:
            k1 = self.rhs(w_hat)[0]
        k2 = self.rhs(w_hat + 0.5 * dt * k1)[0]
        k3 = self.rhs(w_hat + 0.5 * dt * k2)[0]
        k4 = self.rhs(w_hat + dt * k3)[0]
        return w_hat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@lru_cache(maxsize=16)
def kernel(grid: Grid2D, dealias: bool = True) -> SpectralEuler:
    return SpectralEuler(grid, dealias)


def cfl_limit(grid: Grid2D, max_speed: float, cfl: float) -> float:
    return cfl * grid.spacing / max(max_speed, VELOCITY_FLOOR)


def biot_savart(omega: RealField) -> VectorField:
    """Velocity ``u = K * omega`` through the Fourier multiplier ``i (k2, -k1) / |k|^2``.

    The mean of omega and its Nyquist lines carry no velocity.
    """
    K = kernel(omega.grid)
    ux, uy = K.velocity(K.to_spectral(omega.values))
    return VectorField.from_arrays(omega.grid, ux, uy)


@dataclass(frozen=True, eq=False)
class SolverState:
    t: float
    omega: RealField
    u: VectorField

    @classmethod
    def from_vorticity(cls, omega: RealField, t: float = 0.0) -> SolverState:
        return cls(float(t), omega, biot_savart(omega))

    @property
    def grid(self) -> Grid2D:
        return self.omega.grid


def consistency_defects(state: SolverState) -> tuple[float, float]:
    """Relative L2 defects ``(curl u - P omega, div u)`` of a state.

    ``P`` removes the mean and the Nyquist lines.
    """
    K = kernel(state.grid)
    ux_hat = K.to_spectral(state.u.x_component.values)
    uy_hat = K.to_spectral(state.u.y_component.values)
    w_hat = K.project(K.to_spectral(state.omega.values))
    w_hat[0, 0] = 0.0
    curl = 1j * K.kx * uy_hat - 1j * K.ky * ux_hat
    div = 1j * K.kx * ux_hat + 1j * K.ky * uy_hat
    scale_w = np.linalg.norm(w_hat)
    scale_u = math.hypot(np.linalg.norm(ux_hat), np.linalg.norm(uy_hat))
    curl_defect = np.linalg.norm(curl - w_hat) / scale_w if scale_w else float(np.linalg.norm(curl))
    div_defect = np.linalg.norm(div) / scale_u if scale_u else float(np.linalg.norm(div))
    return float(curl_defect), float(div_defect)


def rhs(state: SolverState, dealias: bool = True) -> RealField:
    """Advective tendency ``-(u . grad) omega`` with 2/3-rule dealiased products."""
    K = kernel(state.grid, dealias)
    out, _, _ = K.rhs(K.to_spectral(state.omega.values))
    return RealField(state.grid, K.to_physical(out))


def step(state: SolverState, dt: float, cfl: float = 0.5, dealias: bool = True) -> SolverState:
    """One classical RK4 step; rejects ``dt`` above the CFL limit."""
    grid = state.grid
    limit = cfl_limit(grid, state.u.max_speed_component(), cfl)
    if not dt > 0 or dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt!r} violates the CFL limit {limit:.6g}")
    K = kernel(grid, dealias)
    w_hat = K.project(K.to_spectral(state.omega.values))
    w_new = K.to_physical(K.rk4(w_hat, dt))
    if not np.all(np.isfinite(w_new)):
        raise NumericalInstability(state.t + dt)
    return SolverState.from_vorticity(RealField(grid, w_new), state.t + dt)


@dataclass
class ConservationLedger:
    """Time series of conserved and propagated quantities.

    Columns: t, L1, L2 and L-infinity norms of omega, the integral of omega
    (``mean`` column), the velocity L2 norm (``energy`` column) and the sampled
    Hölder seminorm (NaN when not measured).
    """

    rows: list[tuple[float, ...]] = field(default_factory=list)

    def append(self, row: Sequence[float]) -> None:
        row = tuple(float(v) for v in row)
        if self.rows and not row[0] > self.rows[-1][0]:
            raise ValueError("ledger times must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        idx = LEDGER_COLUMNS.index(name)
        return np.array([r[idx] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def relative_drift(self, name: str) -> float:
        """``max |q(t) - q(0)| / |q(0)|`` (absolute when q(0) = 0)."""
        q = self.column(name)
        scale = abs(q[0])
        drift = float(np.max(np.abs(q - q[0])))
        return drift / scale if scale else drift

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for row in self.rows:
            w.writerow([repr(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ConservationLedger:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != LEDGER_COLUMNS:
            raise ValueError(f"unexpected ledger header {header}")
        ledger = cls()
        for row in reader:
            ledger.append([float(v) for v in row])
        return ledger


def ledger_row(t: float, omega: np.ndarray, ux: np.ndarray, uy: np.ndarray, grid: Grid2D,
               holder_alpha: float | None) -> tuple[float, ...]:
    w = RealField(grid, omega)
    u = VectorField.from_arrays(grid, ux, uy)
    holder = holder_seminorm(w, holder_alpha) if holder_alpha is not None else math.nan
    return (
        t,
        lp_norm(w, 1),
        lp_norm(w, 2),
        lp_norm(w, np.inf),
        w.integral(),
        vector_l2_norm(u),
        holder,
    )


SampleHook = Callable[[float, list, list], None]
StepHook = Callable[[float, list], None]


def march(
    grid: Grid2D,
    w_hats: list[np.ndarray],
    config: SolverConfig,
    on_sample: SampleHook | None = None,
    on_step: StepHook | None = None,
) -> list[np.ndarray]:
    """Advance several vorticities in lockstep on a shared time grid.

    Each step uses the smallest CFL limit over all fields, and steps are clipped
    so that every sample time of ``config`` is hit exactly. ``on_sample`` receives
    ``(t, omegas, velocities)`` in physical space at each sample time, and at
    every ``conservation_check_every`` steps when that is nonzero.
    """
    K = kernel(grid, config.dealias)
    w_hats = [K.project(w) for w in w_hats]
    times = config.sample_times()
    nstep = 0

    def sample(t):
        omegas = [K.to_physical(w) for w in w_hats]
        for w in omegas:
            if not np.all(np.isfinite(w)):
                raise NumericalInstability(t)
        if on_sample is not None:
            on_sample(t, omegas, [K.velocity(w) for w in w_hats])

    sample(0.0)
    t = 0.0
    for target in times[1:]:
        while t < target:
            stages = [K.rhs(w) for w in w_hats]
            umax = max(max(np.max(np.abs(ux)), np.max(np.abs(uy))) for _, ux, uy in stages)
            if not math.isfinite(umax):
                raise NumericalInstability(t)
            if on_step is not None:
                on_step(t, w_hats)
            dt_max = cfl_limit(grid, umax, config.cfl)
            remaining = target - t
            dt = remaining / math.ceil(remaining / dt_max * (1.0 - 1e-12))
            if not config.freeze:
                w_hats = [K.rk4(w, dt, k1) for w, (k1, _, _) in zip(w_hats, stages)]
            t = target if dt >= remaining else t + dt
            nstep += 1
            if config.conservation_check_every and nstep % config.conservation_check_every == 0 and t < target:
                sample(t)
        sample(float(target))
    return w_hats


def _run(omega0: RealField, config: SolverConfig, extra_hook: SampleHook | None = None):
    grid = omega0.grid
    K = kernel(grid, config.dealias)
    ledger = ConservationLedger()

    def on_sample(t, omegas, vels):
        ux, uy = vels[0]
        ledger.append(ledger_row(t, omegas[0], ux, uy, grid, config.holder_alpha))
        if extra_hook is not None:
            extra_hook(t, omegas, vels)

    (w_hat,) = march(grid, [K.to_spectral(omega0.values)], config, on_sample)
    final = RealField(grid, K.to_physical(w_hat))
    return SolverState.from_vorticity(final, config.t_end), ledger


def evolve(omega0: RealField, config: SolverConfig) -> tuple[SolverState, ConservationLedger]:
    """Integrate from ``omega0`` to ``config.t_end``."""
    return _run(omega0, config)


def evolve_with_history(omega0: RealField, config: SolverConfig):
    """Like :func:`evolve` but also records the velocity and vorticity at every sample time.

    Returns ``(state, ledger, history, snapshots)`` where ``history`` is a
    :class:`~eulerlab.flow_map.VelocityHistory` and ``snapshots`` maps each sample
    time to its vorticity.
    """
    from .flow_map import VelocityHistory

    grid = omega0.grid
    times, frames, snapshots = [], [], {}

    def hook(t, omegas, vels):
        times.append(t)
        frames.append(VectorField.from_arrays(grid, *vels[0]))
        snapshots[t] = RealField(grid, omegas[0])

    state, ledger = _run(omega0, config, hook)
    return state, ledger, VelocityHistory(grid, np.array(times), tuple(frames)), snapshots

