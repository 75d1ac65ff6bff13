"""Initial-data families, paired evolutions and continuity experiments.

A paired run evolves two nearby vorticities on a shared time grid and records,
at every sample time, each link of the stability chain

    ||dw||_L2 <= ||dw||_{H^-1}^{g} ||dw||_{H^b}^{1-g},   g = b / (1 + b)
    ||dw||_{H^-1} = ||du||_L2
    ||du(t)||_L2 <= exp(c t) ||du(0)||_L2
    ||du(0)||_L2 <= (L / 2 pi) ||dw(0)||_L2

with every side measured independently.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .dynamics import SolverConfig, kernel, march
from .norms import check_interpolation, hs_norm, lp_norm, vector_l2_norm
from .spectral_core import Grid2D, RealField, VectorField, fourier_shift, remove_nyquist

log = logging.getLogger(__name__)

DataKind = Literal["smooth_dipole", "holder_patch_pair", "mollified_vortex_patch", "taylor_green"]
PATCH_KINDS = ("smooth_dipole", "holder_patch_pair", "mollified_vortex_patch")
DEFAULT_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4)

INTERP_RTOL = 1e-10
DUALITY_RTOL = 1e-10
ENERGY_SLACK = 1e-6
ELLIPTIC_SLACK = 1e-10
CHAIN_SLACK = 1e-9


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialDataSpec:
    """Geometry of a zero-circulation initial vorticity.

    ``centers``, ``radii`` and ``amplitudes`` default to a horizontal dipole in
    the middle of the box with radius ``L/18``, centre separation ``2.4`` radii
    and amplitudes ``(+2, -2)``. ``jitter`` displaces every centre by a seeded
    uniform offset of at most that length.
    """

    kind: DataKind = "smooth_dipole"
    alpha: float = 0.5
    centers: tuple[tuple[float, float], ...] | None = None
    radii: tuple[float, ...] | None = None
    amplitudes: tuple[float, ...] | None = None
    seed: int = 0
    jitter: float = 0.0

    def __post_init__(self):
        if self.kind not in PATCH_KINDS + ("taylor_green",):
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")
        for name in ("centers", "radii", "amplitudes"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(tuple(v) if name == "centers" else v for v in value))

    def resolved(self, grid: Grid2D) -> InitialDataSpec:
        """Explicit geometry for ``grid``, with jitter applied."""
        if self.kind == "taylor_green":
            amps = self.amplitudes if self.amplitudes is not None else (1.0,)
            return replace(self, amplitudes=amps)
        L = grid.box_length
        R = L / 18.0
        centers = self.centers or ((L / 2 - 1.2 * R, L / 2), (L / 2 + 1.2 * R, L / 2))
        m = len(centers)
        radii = self.radii if self.radii is not None else (R,) * m
        amps = self.amplitudes if self.amplitudes is not None else (2.0, -2.0)
        if not len(radii) == len(amps) == m:
            raise ValueError("centers, radii and amplitudes must have equal lengths")
        if any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        if self.jitter:
            rng = np.random.default_rng(self.seed)
            offsets = rng.uniform(-self.jitter, self.jitter, size=(m, 2))
            centers = tuple((float(c[0] + o[0]), float(c[1] + o[1])) for c, o in zip(centers, offsets))
        return replace(self, centers=tuple(map(tuple, centers)), radii=tuple(radii),
                       amplitudes=tuple(amps), jitter=0.0)

    def support_diameter(self, grid: Grid2D) -> float:
        if self.kind == "taylor_green":
            return math.inf
        spec = self.resolved(grid)
        diam = 0.0
        for (c1, r1) in zip(spec.centers, spec.radii):
            for (c2, r2) in zip(spec.centers, spec.radii):
                diam = max(diam, math.dist(c1, c2) + r1 + r2)
        return diam


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation of the first patch that keeps the total integral fixed.

    ``translate`` shifts the first patch by ``delta`` along ``direction`` with an
    exact Fourier phase. ``amplitude_wiggle`` adds ``delta`` times a smooth
    zero-integral bump (unit maximum) centred on the first patch.
    """

    mode: Literal["translate", "amplitude_wiggle"] = "translate"
    delta: float = 1e-3
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.mode not in ("translate", "amplitude_wiggle"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ValueError(f"delta must be finite and nonnegative, got {self.delta}")
        norm = math.hypot(*self.direction)
        if norm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "direction", (self.direction[0] / norm, self.direction[1] / norm))


def _periodic_radius(grid: Grid2D, center: tuple[float, float]) -> np.ndarray:
    L = grid.box_length
    X, Y = grid.mesh()
    dx = (X - center[0] + L / 2) % L - L / 2
    dy = (Y - center[1] + L / 2) % L - L / 2
    return np.hypot(dx, dy)


def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity transition equal to 1 for s <= 0 and 0 for s >= 1."""

    def psi(z):
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-1.0 / z[pos])
        return out

    s = np.clip(s, 0.0, 1.0)
    a, b = psi(1.0 - s), psi(s)
    return a / (a + b)


def unit_profile(kind: str, s: np.ndarray, alpha: float) -> np.ndarray:
    """Radial profile of one patch as a function of ``s = r / radius``."""
    inside = s < 1.0
    out = np.zeros_like(s)
    if kind == "holder_patch_pair":
        out[inside] = (1.0 - s[inside]) ** alpha
    elif kind == "smooth_dipole":
        out[inside] = (1.0 - s[inside] ** 2) ** 4
    elif kind == "mollified_vortex_patch":
        out = _smooth_step((s - 0.6) / 0.4)
    else:
        raise ValueError(f"no patch profile for kind {kind!r}")
    return out


def patch_fields(spec: InitialDataSpec, grid: Grid2D) -> list[np.ndarray]:
    """Individual patch arrays, with negative amplitudes rebalanced to zero total mass."""
    spec = spec.resolved(grid)
    units = [
        unit_profile(spec.kind, _periodic_radius(grid, c) / r, spec.alpha)
        for c, r in zip(spec.centers, spec.radii)
    ]
    amps = np.array(spec.amplitudes, dtype=float)
    masses = np.array([u.sum() for u in units]) * amps
    pos, neg = masses[masses > 0].sum(), -masses[masses < 0].sum()
    if pos or neg:
        if not (pos and neg):
            raise ValueError("zero total circulation needs amplitudes of both signs")
        amps = np.where(amps < 0, amps * pos / neg, amps)
    return [a * u for a, u in zip(amps, units)]


def generate_initial_data(spec: InitialDataSpec, grid: Grid2D) -> RealField:
    """Zero-integral initial vorticity described by ``spec``.

    Nyquist lines are removed from the sampled profile so that the field lies in
    the subspace on which the discrete Biot-Savart law is exact.
    """
    if spec.kind == "taylor_green":
        (amp,) = spec.resolved(grid).amplitudes
        k = 2.0 * math.pi / grid.box_length
        return RealField.from_function(grid, lambda x, y: -2.0 * amp * np.sin(k * x) * np.sin(k * y))
    diam = spec.support_diameter(grid)
    if diam > grid.box_length / 4 * (1 + 1e-12):
        raise ValueError(f"support diameter {diam:.4g} exceeds L/4 = {grid.box_length / 4:.4g}")
    total = np.sum(patch_fields(spec, grid), axis=0)
    return remove_nyquist(RealField(grid, total))


def wiggle(grid: Grid2D, center: tuple[float, float], radius: float) -> RealField:
    """Smooth bump with exactly zero discrete integral and unit maximum."""
    L = grid.box_length
    X, _ = grid.mesh()
    s = _periodic_radius(grid, center) / radius
    dx = (X - center[0] + L / 2) % L - L / 2
    raw = np.where(s < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - s**2, 1e-300)), 0.0) * dx / radius
    F = np.fft.fft2(raw)
    F[0, 0] = 0.0
    F[grid.nyquist_mask] = 0.0
    out = np.fft.ifft2(F).real
    return RealField(grid, out / np.max(np.abs(out)))


def perturbed_pair(spec: InitialDataSpec, pert: PerturbationSpec, grid: Grid2D) -> tuple[RealField, RealField]:
    """``(omega_bar_1, omega_bar_2)`` with equal integrals."""
    base = generate_initial_data(spec, grid)
    if pert.delta == 0:
        return base, base
    resolved = spec.resolved(grid)
    if pert.mode == "translate":
        patches = patch_fields(spec, grid)
        moved = fourier_shift(RealField(grid, patches[0]), pert.delta * pert.direction[0],
                              pert.delta * pert.direction[1])
        other = remove_nyquist(RealField(grid, np.sum(patches[1:], axis=0)))
        return base, moved + other
    bump = wiggle(grid, resolved.centers[0], resolved.radii[0])
    return base, base + pert.delta * bump


# ---------------------------------------------------------------------------
# paired runs
# ---------------------------------------------------------------------------

ROW_COLUMNS = (
    "t", "dw_l2", "dw_hminus1", "dw_hbeta", "du_l2", "residual_proof1", "gap_proof3",
    "c_measured", "energy_bound", "chain_bound", "dw_l1", "dw_linf",
)


@dataclass
class StabilityReport:
    """Per-time chain quantities of one paired run plus run-level scalars."""

    delta: float
    beta: float
    box_length: float
    rows: list[dict] = field(default_factory=list)
    initial_l2: float = 0.0
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def gamma_theory(self) -> float:
        return self.beta / (1.0 + self.beta)

    @property
    def c_proof4(self) -> float:
        return self.box_length / (2.0 * math.pi)

    @property
    def flagged(self) -> bool:
        return not all(c["passed"] for c in self.checks.values())

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def final_l2(self) -> float:
        return float(self.rows[-1]["dw_l2"])

    def hbeta_growth_rate(self) -> float:
        """Smallest ``c'`` with ``H_beta(t) <= H_beta(0) exp(c' t)`` on the samples."""
        t, h = self.column("t"), self.column("dw_hbeta")
        if h[0] == 0:
            return 0.0
        rates = [math.log(hk / h[0]) / tk for tk, hk in zip(t[1:], h[1:]) if hk > 0]
        return max([0.0, *rates])

    def theorem_constants(self) -> tuple[float, float]:
        """``(C, c)`` of ``||dw(t)|| <= C e^{c t} ||dw(0)||^gamma`` assembled from the chain."""
        g = self.gamma_theory
        hmax = float(np.max(self.column("dw_hbeta")))
        C = self.c_proof4**g * hmax ** (1.0 - g)
        return C, g * float(self.rows[-1]["c_measured"])

    def summary(self) -> dict:
        C, c = self.theorem_constants()
        return {
            "delta": self.delta,
            "beta": self.beta,
            "gamma_theory": self.gamma_theory,
            "C_proof4": self.c_proof4,
            "initial_l2": self.initial_l2,
            "final_l2": self.final_l2,
            "c_measured": float(self.rows[-1]["c_measured"]),
            "hbeta_growth_rate": self.hbeta_growth_rate(),
            "C_theorem": C,
            "c_theorem": c,
            "flagged": self.flagged,
            "checks": self.checks,
            **self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for row in self.rows:
            w.writerow([repr(float(row[c])) for c in ROW_COLUMNS])
        return buf.getvalue()


def _record_check(checks: dict, name: str, ok: bool, margin: float, t: float) -> None:
    entry = checks.setdefault(name, {"passed": True, "worst_margin": math.inf, "first_failure_t": None})
    if margin < entry["worst_margin"]:
        entry["worst_margin"] = float(margin)
    if not ok and entry["passed"]:
        entry["passed"] = False
        entry["first_failure_t"] = float(t)


def run_pair(spec: InitialDataSpec, pert: PerturbationSpec, beta: float, config: SolverConfig,
             grid: Grid2D) -> StabilityReport:
    """Evolve a perturbed pair side by side and verify the stability chain at each sample.

    Checks (each stored in ``report.checks`` with its worst relative margin):

    * ``interpolation``: residual >= -1e-10 ||dw||_L2
    * ``energy``: ||du(t)|| <= exp(c t) ||du(0)|| (1 + 1e-6), ``c`` the running
      sup of the grad-u max norm of both solutions
    * ``duality``: | ||dw||_{H^-1} - ||du|| | <= 1e-10 ||dw||_{H^-1}
    * ``elliptic``: ||du(0)|| <= (L / 2 pi) ||dw(0)||
    * ``chain``: ||dw|| <= ||du||^g ||dw||_{H^b}^{1-g} (1 + 1e-9)
    * ``theorem``: ||dw(t)|| <= C e^{c t} ||dw(0)||^g with the assembled constants
    """
    if spec.kind in ("holder_patch_pair",) and not 0 < beta < spec.alpha:
        raise ValueError(f"beta must lie in (0, alpha) = (0, {spec.alpha}), got {beta}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    w1, w2 = perturbed_pair(spec, pert, grid)
    K = kernel(grid, config.dealias)
    report = StabilityReport(delta=pert.delta, beta=beta, box_length=grid.box_length)
    report.meta = {
        "kind": spec.kind, "alpha": spec.alpha, "mode": pert.mode,
        "n": grid.n, "box_length": grid.box_length, "t_end": config.t_end,
    }
    g = beta / (1.0 + beta)
    c_sup = [0.0]
    du0 = [None]

    def on_step(t, w_hats):
        c_sup[0] = max(c_sup[0], *(K.velocity_gradient_max(w) for w in w_hats))

    def on_sample(t, omegas, vels):
        on_step(t, [K.to_spectral(w) for w in omegas])
        dw = RealField(grid, omegas[0] - omegas[1])
        du = VectorField.from_arrays(grid, vels[0][0] - vels[1][0], vels[0][1] - vels[1][1])
        l2 = lp_norm(dw, 2)
        hm1 = hs_norm(dw, -1.0)
        hb = hs_norm(dw, beta)
        du_l2 = vector_l2_norm(du)
        residual = check_interpolation(dw, beta)
        gap = abs(hm1 - du_l2)
        if du0[0] is None:
            du0[0] = du_l2
            report.initial_l2 = l2
            ok = du_l2 <= report.c_proof4 * l2 * (1 + ELLIPTIC_SLACK)
            _record_check(report.checks, "elliptic", ok,
                          (report.c_proof4 * l2 - du_l2) / l2 if l2 else 0.0, t)
        energy_bound = math.exp(c_sup[0] * t) * du0[0]
        chain_bound = du_l2**g * hb ** (1.0 - g)
        _record_check(report.checks, "interpolation", residual >= -INTERP_RTOL * l2,
                      residual / l2 if l2 else 0.0, t)
        _record_check(report.checks, "energy", du_l2 <= energy_bound * (1 + ENERGY_SLACK),
                      (energy_bound - du_l2) / energy_bound if energy_bound else 0.0, t)
        _record_check(report.checks, "duality", gap <= DUALITY_RTOL * hm1,
                      (DUALITY_RTOL * hm1 - gap) / hm1 if hm1 else 0.0, t)
        _record_check(report.checks, "chain", l2 <= chain_bound * (1 + CHAIN_SLACK),
                      (chain_bound - l2) / chain_bound if chain_bound else 0.0, t)
        report.rows.append({
            "t": t, "dw_l2": l2, "dw_hminus1": hm1, "dw_hbeta": hb, "du_l2": du_l2,
            "residual_proof1": residual, "gap_proof3": gap, "c_measured": c_sup[0],
            "energy_bound": energy_bound, "chain_bound": chain_bound,
            "dw_l1": lp_norm(dw, 1), "dw_linf": lp_norm(dw, np.inf),
        })

    march(grid, [K.to_spectral(w1.values), K.to_spectral(w2.values)], config, on_sample, on_step)

    C, _ = report.theorem_constants()
    for row in report.rows:
        bound = C * math.exp(g * row["c_measured"] * row["t"]) * report.initial_l2**g
        _record_check(report.checks, "theorem", row["dw_l2"] <= bound * (1 + CHAIN_SLACK),
                      (bound - row["dw_l2"]) / bound if bound else 0.0, row["t"])
    if report.flagged:
        failed = [k for k, v in report.checks.items() if not v["passed"]]
        log.warning("stability chain check(s) failed for delta=%g: %s", pert.delta, ", ".join(failed))
    return report


# ---------------------------------------------------------------------------
# rate fitting and families
# ---------------------------------------------------------------------------

def fit_rate(deltas: Sequence[float], errors: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares power law ``error = C * delta**gamma``; returns ``(gamma, C, r2)``."""
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    if d.shape != e.shape or d.size < 3:
        raise ValueError("fit_rate needs at least three (delta, error) pairs")
    if np.any(d <= 0) or np.any(e <= 0) or not np.all(np.isfinite(d)) or not np.all(np.isfinite(e)):
        raise ValueError("fit_rate needs strictly positive finite values")
    x, y = np.log(d), np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(slope), float(math.exp(intercept)), float(r2)


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Ordered map over independent jobs, in a process pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class FamilyReport:
    reports: list[StabilityReport]
    fit: dict | None

    def summary(self) -> dict:
        return {"runs": [r.summary() for r in self.reports], "fit": self.fit}


class _PairJob:
    def __init__(self, spec, pert, beta, config, grid):
        self.args = (spec, pert, beta, config, grid)

    def __call__(self, delta):
        spec, pert, beta, config, grid = self.args
        return run_pair(spec, replace(pert, delta=delta), beta, config, grid)


def run_family(spec: InitialDataSpec, pert: PerturbationSpec, deltas: Sequence[float], beta: float,
               config: SolverConfig, grid: Grid2D, workers: int = 1) -> FamilyReport:
    """Run a delta ladder and fit final-time errors against delta (needs >= 3 runs)."""
    reports = parallel_map(_PairJob(spec, pert, beta, config, grid), deltas, workers)
    fit = None
    if len(reports) >= 3:
        finals = [r.final_l2 for r in reports]
        gamma, C, r2 = fit_rate(deltas, finals)
        gamma0, C0, r20 = fit_rate([r.initial_l2 for r in reports], finals)
        fit = {
            "gamma_fit": gamma, "C_fit": C, "r2": r2,
            "gamma_fit_initial_l2": gamma0, "C_fit_initial_l2": C0, "r2_initial_l2": r20,
            "gamma_theory": beta / (1.0 + beta),
        }
    else:
        log.warning("delta ladder has %d entries; a rate fit needs at least 3", len(reports))
    return FamilyReport(reports, fit)


# ---------------------------------------------------------------------------
# qualitative convergence and periodization control
# ---------------------------------------------------------------------------

@dataclass
class RefinementReport:
    kind: str
    rows: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def initial_errors(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def sup_errors(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def nonincreasing(self, rtol: float = 0.1) -> bool:
        s = self.sup_errors
        return bool(np.all(s[1:] <= s[:-1] * (1 + rtol)))

    def contract_holds(self) -> bool:
        """Nonincreasing sups (10%) and final sup <= first sup x initial-error ratio x 10."""
        s, e = self.sup_errors, self.initial_errors
        if s[0] == 0:
            return bool(np.all(s == 0))
        return self.nonincreasing() and bool(s[-1] <= s[0] * (e[-1] / e[0]) * 10)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "initial_l2", "sup_l2"])
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def approximate(omega_bar: RealField, kind: str, param: float) -> RealField:
    """Approximation of ``omega_bar``.

    ``mollification``: Gaussian filter ``exp(-eps^2 |k|^2 / 2)`` with width
    ``eps = param * h``. ``truncation``: values with ``|w| < param * max|w|`` set
    to zero.
    """
    grid = omega_bar.grid
    if kind == "mollification":
        eps = param * grid.spacing
        F = np.fft.fft2(omega_bar.values) * np.exp(-0.5 * eps**2 * grid.k_squared)
        return RealField(grid, np.fft.ifft2(F).real)
    if kind == "truncation":
        v = omega_bar.values
        level = param * np.max(np.abs(v))
        return remove_nyquist(RealField(grid, np.where(np.abs(v) < level, 0.0, v)))
    raise ValueError(f"unknown approximation {kind!r}")


def theorem1_experiment(target: InitialDataSpec, approximation: str, params: Sequence[float],
                        config: SolverConfig, grid: Grid2D) -> RefinementReport:
    """Evolve ``omega_bar`` and approximations of it; record sup-in-time L2 distances."""
    omega_bar = generate_initial_data(target, grid)
    approx = [approximate(omega_bar, approximation, p) for p in params]
    init = np.array([lp_norm(a - omega_bar, 2) for a in approx])
    if np.any(np.diff(init) >= 0) and not np.all(init == 0):
        raise ValueError(f"initial errors must be strictly decreasing, got {init}")
    K = kernel(grid, config.dealias)
    reference: list[np.ndarray] = []
    march(grid, [K.to_spectral(omega_bar.values)], config,
          lambda t, omegas, vels: reference.append(omegas[0]))
    report = RefinementReport(approximation)
    for p, a, e0 in zip(params, approx, init):
        sup = [0.0]
        idx = iter(range(len(reference)))

        def on_sample(t, omegas, vels):
            diff = RealField(grid, omegas[0] - reference[next(idx)])
            sup[0] = max(sup[0], lp_norm(diff, 2))

        march(grid, [K.to_spectral(a.values)], config, on_sample)
        report.rows.append((float(p), float(e0), sup[0]))
    return report


def box_doubling_check(spec: InitialDataSpec, config: SolverConfig, grid: Grid2D) -> float:
    """Distance between runs in boxes ``L`` and ``2L`` at equal spacing.

    The data sit at the same place relative to the small box; the large box
    holds them offset by ``L/2``. The L2 distance at ``t_end`` is taken over the
    small box region.
    """
    resolved = spec.resolved(grid)
    L, n = grid.box_length, grid.n
    big = Grid2D(2 * n, 2 * L)
    if spec.kind == "taylor_green":
        raise ValueError("box doubling needs compactly supported data")
    generate_initial_data(resolved, grid)  # support check in the small box
    shifted = replace(resolved, centers=tuple((x + L / 2, y + L / 2) for x, y in resolved.centers))
    finals = []
    for g, s in ((grid, resolved), (big, shifted)):
        K = kernel(g, config.dealias)
        out = march(g, [K.to_spectral(generate_initial_data(s, g).values)], config)
        finals.append(K.to_physical(out[0]))
    small, large = finals
    window = large[n // 2: n // 2 + n, n // 2: n // 2 + n]
    return float(np.sqrt(np.sum((small - window) ** 2) * grid.cell_area))


__all__ = [
    "DEFAULT_DELTAS", "FamilyReport", "InitialDataSpec", "PerturbationSpec", "RefinementReport",
    "StabilityReport", "approximate", "box_doubling_check", "fit_rate", "generate_initial_data",
    "parallel_map", "patch_fields", "perturbed_pair", "run_family", "run_pair", "theorem1_experiment",
]
