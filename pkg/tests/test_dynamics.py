import math

import numpy as np
import pytest

from eulerlab.dynamics import (
    CFLViolation,
    ConservationLedger,
    NumericalInstability,
    SolverConfig,
    SolverState,
    SpectralEuler,
    biot_savart,
    consistency_defects,
    evolve,
    evolve_with_history,
    rhs,
    step,
)
from eulerlab.norms import lp_norm
from eulerlab.spectral_core import Grid2D, RealField, remove_nyquist
from eulerlab.flow_map import bilinear
from eulerlab.stability_lab import InitialDataSpec, generate_initial_data, patch_fields

from conftest import random_zero_mean


def taylor_green(n):
    return generate_initial_data(InitialDataSpec("taylor_green"), Grid2D(n))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"cfl": 0.0}, {"cfl": 1.5}, {"t_end": -1.0}, {"t_end": math.inf},
                                    {"conservation_check_every": -1}, {"samples_per_unit_time": 0},
                                    {"holder_alpha": 1.2}])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_sample_times(self):
        times = SolverConfig(t_end=0.5, samples_per_unit_time=8).sample_times()
        assert np.allclose(times, np.linspace(0, 0.5, 5))
        assert times[-1] == 0.5


class TestBiotSavart:
    def test_consistency(self, rng):
        state = SolverState.from_vorticity(random_zero_mean(Grid2D(64, 3.0), rng))
        curl, div = consistency_defects(state)
        assert curl < 1e-12 and div < 1e-12

    def test_single_mode_velocity(self):
        # omega = cos(x): stream function cos(x), u = (d_y psi, -d_x psi) = (0, sin(x))
        g = Grid2D(32)
        u = biot_savart(RealField.from_function(g, lambda x, y: np.cos(x)))
        X, _ = g.mesh()
        assert np.max(np.abs(u.x_component.values)) < 1e-14
        assert np.max(np.abs(u.y_component.values - np.sin(X))) < 1e-13

    def test_mean_carries_no_velocity(self):
        g = Grid2D(16)
        u = biot_savart(RealField(g, np.full((16, 16), 5.0)))
        assert u.max_speed_component() == 0.0

    def test_point_vortex_far_field(self):
        # a small radial patch looks like a point vortex of its circulation; the
        # partner sits half a box away, where it and its images nearly cancel
        g = Grid2D(256, 8 * math.pi)
        L = g.box_length
        spec = InitialDataSpec("mollified_vortex_patch", centers=((L / 4, L / 2), (3 * L / 4, L / 2)),
                               radii=(0.25, 0.25), amplitudes=(1.0, -1.0))
        first, second = patch_fields(spec, g)
        u = biot_savart(remove_nyquist(RealField(g, first + second)))
        circulation = np.sum(first) * g.cell_area
        r = 0.75
        th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        x, y = L / 4 + r * np.cos(th), L / 2 + r * np.sin(th)
        ux = bilinear(u.x_component.values, g, x, y)
        uy = bilinear(u.y_component.values, g, x, y)
        tangential = -ux * np.sin(th) + uy * np.cos(th)
        assert np.max(np.abs(tangential / (circulation / (2 * math.pi * r)) - 1)) < 0.02


class TestRhs:
    def test_taylor_green_is_steady(self):
        state = SolverState.from_vorticity(taylor_green(32))
        assert lp_norm(rhs(state), np.inf) < 1e-13

    def test_rhs_zero_integral(self, rng):
        state = SolverState.from_vorticity(random_zero_mean(Grid2D(32), rng))
        assert abs(rhs(state).integral()) < 1e-12

    def test_step_rejects_large_dt(self):
        state = SolverState.from_vorticity(taylor_green(32))
        with pytest.raises(CFLViolation):
            step(state, 1.0)
        with pytest.raises(CFLViolation):
            step(state, 0.0)

    def test_step_advances_time(self):
        state = SolverState.from_vorticity(taylor_green(32))
        assert step(state, 0.01).t == pytest.approx(0.01)


class TestMirror:
    def test_reflection_equivariance(self, rng):
        # x -> -x maps omega to -omega(-x, y)
        g = Grid2D(32)
        w = random_zero_mean(g, rng, decay=2.0)
        idx = (-np.arange(32)) % 32
        mirrored = RealField(g, -w.values[idx, :])
        cfg = SolverConfig(t_end=0.2, holder_alpha=None)
        a, _ = evolve(w, cfg)
        b, _ = evolve(mirrored, cfg)
        assert np.max(np.abs(-a.omega.values[idx, :] - b.omega.values)) < 1e-10

    def test_translation_equivariance(self, rng):
        g = Grid2D(32)
        w = random_zero_mean(g, rng, decay=2.0)
        cfg = SolverConfig(t_end=0.2, holder_alpha=None)
        a, _ = evolve(w, cfg)
        b, _ = evolve(w.shifted(5, -3), cfg)
        assert np.max(np.abs(a.omega.shifted(5, -3).values - b.omega.values)) < 1e-10


class TestEvolve:
    def test_zero_field(self):
        state, ledger = evolve(RealField.zeros(Grid2D(16)), SolverConfig(t_end=0.1))
        assert np.all(state.omega.values == 0)
        assert all(v == 0 for row in ledger.rows for v in row[1:])

    def test_conservation_smooth_dipole(self):
        omega = generate_initial_data(InitialDataSpec(), Grid2D(64))
        _, ledger = evolve(omega, SolverConfig(t_end=0.5, holder_alpha=None))
        assert ledger.relative_drift("l2") < 1e-4
        assert ledger.relative_drift("energy") < 1e-4
        assert np.max(np.abs(ledger.column("mean"))) < 1e-12

    def test_freeze_keeps_data(self, rng):
        w = random_zero_mean(Grid2D(16), rng)
        state, _ = evolve(w, SolverConfig(t_end=0.3, freeze=True))
        assert np.allclose(state.omega.values, w.values, atol=1e-14)

    def test_conservation_check_every_adds_rows(self):
        w = taylor_green(64)
        cfg = SolverConfig(t_end=0.5, holder_alpha=None, samples_per_unit_time=2)
        _, plain = evolve(w, cfg)
        _, dense = evolve(w, SolverConfig(t_end=0.5, holder_alpha=None, samples_per_unit_time=2,
                                          conservation_check_every=1))
        assert len(dense.rows) > len(plain.rows)

    def test_history(self):
        w = taylor_green(16)
        state, ledger, history, snaps = evolve_with_history(w, SolverConfig(t_end=0.25))
        assert len(history.frames) == len(ledger.rows) == len(snaps)
        assert history.t_max == pytest.approx(0.25)

    def test_instability_reported(self, monkeypatch, rng):
        monkeypatch.setattr(SpectralEuler, "rk4", lambda self, w, dt, k1=None: w * np.nan)
        with pytest.raises(NumericalInstability) as info:
            evolve(random_zero_mean(Grid2D(16), rng), SolverConfig(t_end=0.1))
        assert info.value.t > 0


class TestLedger:
    def test_csv_round_trip(self):
        omega = generate_initial_data(InitialDataSpec(), Grid2D(32))
        _, ledger = evolve(omega, SolverConfig(t_end=0.1))
        again = ConservationLedger.from_csv(ledger.to_csv())
        assert again.rows == ledger.rows

    def test_times_increasing(self):
        ledger = ConservationLedger()
        ledger.append([0.0] * 7)
        with pytest.raises(ValueError):
            ledger.append([0.0] * 7)

    def test_bad_header(self):
        with pytest.raises(ValueError):
            ConservationLedger.from_csv("a,b\n1,2\n")
