"""Lebesgue, homogeneous Sobolev and Hölder norms of periodic grid fields."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .spectral_core import RealField, VectorField, forward_transform

ZERO_MEAN_RTOL = 1e-10
NEAR_OFFSET_RADIUS = 8
FAR_SAMPLES_PER_POINT = 64


class ZeroMeanError(ValueError):
    """A negative-order norm was requested for a field with nonzero mean."""


def _check_order(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or abs(s) > 4:
        raise ValueError(f"Sobolev order must be finite with |s| <= 4, got {s}")
    return s


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Hölder exponent must lie in (0, 1), got {alpha}")
    return alpha


def lp_norm(f: RealField, p: Union[int, float, str] = 2) -> float:
    """Grid quadrature of the L^p norm for p in {1, 2, inf}."""
    v = f.values
    if p in (np.inf, "inf", math.inf):
        return float(np.max(np.abs(v)))
    dA = f.grid.cell_area
    if p == 1:
        return float(np.sum(np.abs(v)) * dA)
    if p == 2:
        return float(math.sqrt(np.sum(v * v) * dA))
    raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


def vector_l2_norm(u: VectorField) -> float:
    a = lp_norm(u.x_component, 2)
    b = lp_norm(u.y_component, 2)
    return math.hypot(a, b)


def hs_norm(f: RealField, s: float) -> float:
    """Homogeneous Sobolev norm of order ``s`` with the zero mode excluded.

    Computes ``(L^2 sum_{k != 0} |k|^{2s} |fhat(k)|^2)^{1/2}``. For ``s < 0`` the
    field must have zero mean, otherwise :class:`ZeroMeanError` is raised.
    """
    s = _check_order(s)
    grid = f.grid
    L = grid.box_length
    coeffs = forward_transform(f).coeffs
    if s < 0:
        mean = abs(coeffs[0, 0])
        rms = lp_norm(f, 2) / L
        if mean > ZERO_MEAN_RTOL * rms:
            raise ZeroMeanError(
                f"order {s} needs a zero-mean field; mean {mean:.3e} exceeds {ZERO_MEAN_RTOL:.0e} x rms {rms:.3e}"
            )
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0
    weight = k2**s
    weight[0, 0] = 0.0
    total = np.sum(weight * (coeffs.real**2 + coeffs.imag**2))
    return float(L * math.sqrt(total))


def holder_seminorm(f: RealField, alpha: float, seed: int = 0) -> float:
    """Sampled periodic Hölder seminorm ``max |f(x) - f(y)| / dist(x, y)^alpha``.

    Every offset with Chebyshev length at most 8 is visited at every point; in
    addition each point is paired with 64 random longer offsets of length at most
    ``L/4``. The result is a lower bound of the all-pairs grid seminorm restricted
    to ``dist <= L/4``.
    """
    alpha = _check_alpha(alpha)
    grid = f.grid
    n, h = grid.n, grid.spacing
    v = f.values
    r0_cells = n / 4.0
    best = 0.0
    m = NEAR_OFFSET_RADIUS
    for di in range(0, m + 1):
        for dj in range(-m, m + 1):
            if di == 0 and dj <= 0:
                continue
            r = math.hypot(di, dj)
            if r > r0_cells:
                continue
            diff = np.max(np.abs(v - np.roll(v, (-di, -dj), axis=(0, 1))))
            best = max(best, diff / (r * h) ** alpha)

    rmax = int(math.floor(r0_cells))
    di, dj = np.meshgrid(np.arange(-rmax, rmax + 1), np.arange(-rmax, rmax + 1), indexing="ij")
    far = (np.maximum(np.abs(di), np.abs(dj)) > m) & (np.hypot(di, dj) <= r0_cells)
    cand_i, cand_j = di[far], dj[far]
    if cand_i.size:
        rng = np.random.default_rng(seed)
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        flat = v.ravel()
        inv_dist = (np.hypot(cand_i, cand_j) * h) ** (-alpha)
        for _ in range(FAR_SAMPLES_PER_POINT):
            pick = rng.integers(cand_i.size, size=n * n)
            other = v[(ii + cand_i[pick]) % n, (jj + cand_j[pick]) % n]
            best = max(best, float(np.max(np.abs(flat - other) * inv_dist[pick])))
    return float(best)


def check_interpolation(f: RealField, beta: float) -> float:
    """Residual of ``||f||_{L2} <= ||f||_{H^-1}^{b/(1+b)} ||f||_{H^b}^{1/(1+b)}``.

    A nonnegative return value means the inequality holds.
    """
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    weak = hs_norm(f, -1.0)
    strong = hs_norm(f, beta)
    bound = weak ** (beta / (1.0 + beta)) * strong ** (1.0 / (1.0 + beta))
    return float(bound - lp_norm(f, 2))


def check_duality(omega: RealField, u: VectorField) -> float:
    """``| ||omega||_{H^-1} - ||u||_{L2} |`` for a Biot-Savart pair."""
    return float(abs(hs_norm(omega, -1.0) - vector_l2_norm(u)))


@dataclass(frozen=True)
class NormReport:
    l1: float
    l2: float
    linf: float
    hs_values: tuple[tuple[float, float], ...] = ()
    holder_seminorm: float | None = None

    def __post_init__(self):
        values = [self.l1, self.l2, self.linf, *(v for _, v in self.hs_values)]
        if self.holder_seminorm is not None:
            values.append(self.holder_seminorm)
        for v in values:
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"norm entries must be finite and nonnegative, got {v}")

    def hs(self, s: float) -> float | None:
        for order, value in self.hs_values:
            if order == s:
                return value
        return None

    def to_json(self, beta: float | None = None) -> dict:
        """Flat mapping with keys l1, l2, linf, hminus1, hbeta, holder."""
        if beta is None:
            positive = [s for s, _ in self.hs_values if s > 0]
            beta = positive[0] if positive else None
        return {
            "l1": self.l1,
            "l2": self.l2,
            "linf": self.linf,
            "hminus1": self.hs(-1.0),
            "hbeta": None if beta is None else self.hs(beta),
            "holder": self.holder_seminorm,
        }


def norm_report(f: RealField, beta: float | None = None, alpha: float | None = None) -> NormReport:
    """Collect the standard norm table of a field.

    The H^-1 entry is skipped (left out) for fields with nonzero mean.
    """
    hs_values = []
    try:
        hs_values.append((-1.0, hs_norm(f, -1.0)))
    except ZeroMeanError:
        pass
    if beta is not None:
        hs_values.append((float(beta), hs_norm(f, beta)))
    return NormReport(
        l1=lp_norm(f, 1),
        l2=lp_norm(f, 2),
        linf=lp_norm(f, np.inf),
        hs_values=tuple(hs_values),
        holder_seminorm=None if alpha is None else holder_seminorm(f, alpha),
    )


__all__ = [
    "NormReport",
    "ZeroMeanError",
    "check_duality",
    "check_interpolation",
    "holder_seminorm",
    "hs_norm",
    "lp_norm",
    "norm_report",
    "vector_l2_norm",
]
