"""Characteristic integration of recorded velocity histories.

Trajectories solve ``dX/ds = u(s, X)`` with classical RK4 in ``s``. Velocities
are sampled off-grid by periodic bilinear interpolation and linearly in time
between recorded frames. Positions are carried unwrapped; they are wrapped into
the box only when reported.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .norms import lp_norm
from .spectral_core import Grid2D, RealField, VectorField

DIVERGENCE_RTOL = 1e-10


def bilinear(values: np.ndarray, grid: Grid2D, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Periodic bilinear interpolation of grid samples at arbitrary points."""
    n, h = grid.n, grid.spacing
    fx, fy = x / h, y / h
    i0, j0 = np.floor(fx), np.floor(fy)
    tx, ty = fx - i0, fy - j0
    i0 = i0.astype(np.int64) % n
    j0 = j0.astype(np.int64) % n
    i1, j1 = (i0 + 1) % n, (j0 + 1) % n
    return (
        (1 - tx) * (1 - ty) * values[i0, j0]
        + tx * (1 - ty) * values[i1, j0]
        + (1 - tx) * ty * values[i0, j1]
        + tx * ty * values[i1, j1]
    )


def _spectral_divergence(u: VectorField) -> float:
    grid = u.grid
    n = grid.n
    k = np.where(grid.signed_indices == n // 2, 0.0, grid.wavenumbers)
    ux = np.fft.fft2(u.x_component.values)
    uy = np.fft.fft2(u.y_component.values)
    div = 1j * k[:, None] * ux + 1j * k[None, :] * uy
    scale = math.hypot(np.linalg.norm(ux), np.linalg.norm(uy))
    return float(np.linalg.norm(div) / scale) if scale else 0.0


@dataclass(frozen=True, eq=False)
class VelocityHistory:
    """Velocity frames at strictly increasing times starting from 0."""

    grid: Grid2D
    times: np.ndarray
    frames: tuple[VectorField, ...]
    check_divergence: bool = True

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 2 or times.shape != (len(self.frames),):
            raise ValueError("a velocity history needs at least two frames with one time each")
        if np.any(np.diff(times) <= 0):
            raise ValueError("history times must be strictly increasing")
        for i, frame in enumerate(self.frames):
            if frame.grid != self.grid:
                raise ValueError(f"frame {i} lives on a different grid")
            if self.check_divergence:
                d = _spectral_divergence(frame)
                if d > DIVERGENCE_RTOL:
                    raise ValueError(f"frame {i} is not divergence-free (relative defect {d:.2e})")
        stacked = np.stack([[f.x_component.values, f.y_component.values] for f in self.frames])
        object.__setattr__(self, "_stack", stacked)
        object.__setattr__(self, "_max_speed", float(np.max(np.abs(stacked))))

    @classmethod
    def steady(cls, u: VectorField, t_end: float, nframes: int = 2) -> VelocityHistory:
        times = np.linspace(0.0, t_end, nframes)
        return cls(u.grid, times, tuple([u] * nframes))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def velocity(self, s: float, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        times = self.times
        idx = int(np.clip(np.searchsorted(times, s, side="right") - 1, 0, len(times) - 2))
        t0, t1 = times[idx], times[idx + 1]
        theta = min(max((s - t0) / (t1 - t0), 0.0), 1.0)
        frame = self._stack[idx] if theta == 0.0 else (1.0 - theta) * self._stack[idx] + theta * self._stack[idx + 1]
        return bilinear(frame[0], self.grid, x, y), bilinear(frame[1], self.grid, x, y)

    def substep_limit(self, cfl: float = 0.5) -> float:
        return cfl * self.grid.spacing / max(self._max_speed, 1e-12)


def integrate(history: VelocityHistory, points: np.ndarray, s_from: float, s_to: float,
              cfl: float = 0.5) -> np.ndarray:
    """Transport unwrapped ``points`` (shape ``(m, 2)``) from time ``s_from`` to ``s_to``.

    Sub-steps never straddle a frame time and are no larger than the frame
    spacing or the CFL step of the largest recorded speed.
    """
    lo, hi = float(history.times[0]), history.t_max
    for s in (s_from, s_to):
        if not lo - 1e-12 <= s <= hi + 1e-12:
            raise ValueError(f"time {s} outside the recorded range [{lo}, {hi}]")
    P = np.array(points, dtype=float).reshape(-1, 2)
    if s_from == s_to:
        return P
    x, y = P[:, 0].copy(), P[:, 1].copy()
    hmax = history.substep_limit(cfl)
    direction = 1.0 if s_to > s_from else -1.0
    inner = history.times[(history.times > min(s_from, s_to)) & (history.times < max(s_from, s_to))]
    knots = np.concatenate([[s_from], inner[::int(direction)], [s_to]])
    for a, b in zip(knots[:-1], knots[1:]):
        m = max(1, math.ceil(abs(b - a) / hmax - 1e-9))
        ds = (b - a) / m
        s = a
        for _ in range(m):
            k1x, k1y = history.velocity(s, x, y)
            k2x, k2y = history.velocity(s + 0.5 * ds, x + 0.5 * ds * k1x, y + 0.5 * ds * k1y)
            k3x, k3y = history.velocity(s + 0.5 * ds, x + 0.5 * ds * k2x, y + 0.5 * ds * k2y)
            k4x, k4y = history.velocity(s + ds, x + ds * k3x, y + ds * k3y)
            x = x + ds / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y = y + ds / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            s += ds
    return np.column_stack([x, y])


@dataclass(frozen=True, eq=False)
class FlowSample:
    """Query points at time t and their preimages at time 0.

    ``points`` and ``preimages`` are wrapped into ``[0, L)^2``; the unwrapped
    preimages are kept for distance computations across the periodic seam.
    """

    t: float
    points: np.ndarray
    preimages: np.ndarray
    preimages_unwrapped: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "X0x", "X0y"])
        for p, q in zip(self.points, self.preimages):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(q[0])), repr(float(q[1]))])
        return buf.getvalue()


def backward_flow(history: VelocityHistory, t: float, points: np.ndarray, cfl: float = 0.5) -> FlowSample:
    """Preimages ``X(0, t, x)`` of the given points under the recorded flow."""
    P = np.array(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(P)):
        raise ValueError("query points must be finite")
    L = history.grid.box_length
    X0 = integrate(history, P, t, 0.0, cfl)
    return FlowSample(float(t), np.mod(P, L), np.mod(X0, L), X0)


def check_lagrangian_representation(omega_bar: RealField, history: VelocityHistory,
                                    omega_t: RealField, t: float) -> float:
    """``|| omega(t) - omega_bar(X(0, t, .)) ||_{L2}`` over the full grid."""
    grid = history.grid
    if omega_bar.grid != grid or omega_t.grid != grid:
        raise ValueError("fields and velocity history must share one grid")
    X, Y = grid.mesh()
    sample = backward_flow(history, t, np.column_stack([X.ravel(), Y.ravel()]))
    pre = sample.preimages_unwrapped
    transported = bilinear(omega_bar.values, grid, pre[:, 0], pre[:, 1]).reshape(grid.n, grid.n)
    return lp_norm(RealField(grid, omega_t.values - transported), 2)


def polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def incompressibility_check(history: VelocityHistory, t: float, cell_corners: np.ndarray,
                            edge_samples: int = 8) -> float:
    """Area ratio of the backward image of a small quadrilateral.

    Each edge is sampled at ``edge_samples`` points so that the curved image
    boundary is resolved.
    """
    corners = np.array(cell_corners, dtype=float).reshape(-1, 2)
    if corners.shape[0] < 3:
        raise ValueError("need at least three corners")
    area0 = polygon_area(corners)
    scale = np.max(np.ptp(corners, axis=0)) ** 2
    if not abs(area0) > 1e-12 * scale or scale == 0:
        raise ValueError("degenerate cell polygon")
    nxt = np.roll(corners, -1, axis=0)
    frac = np.arange(edge_samples)[:, None, None] / edge_samples
    boundary = (corners[None] * (1 - frac) + nxt[None] * frac).transpose(1, 0, 2).reshape(-1, 2)
    image = integrate(history, boundary, t, 0.0)
    return polygon_area(image) / polygon_area(boundary)
