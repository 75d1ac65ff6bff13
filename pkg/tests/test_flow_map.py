import math

import numpy as np
import pytest

from eulerlab.dynamics import SolverConfig, biot_savart, evolve_with_history
from eulerlab.flow_map import (
    VelocityHistory,
    backward_flow,
    bilinear,
    check_lagrangian_representation,
    incompressibility_check,
    integrate,
    polygon_area,
)
from eulerlab.norms import lp_norm
from eulerlab.spectral_core import Grid2D, RealField, VectorField
from eulerlab.stability_lab import InitialDataSpec, generate_initial_data


def uniform_flow(grid, cx, cy, t_end=1.0):
    ones = np.ones((grid.n, grid.n))
    u = VectorField(grid, RealField(grid, cx * ones), RealField(grid, cy * ones))
    return VelocityHistory.steady(u, t_end)


@pytest.fixture(scope="module")
def dipole_run():
    omega = generate_initial_data(InitialDataSpec(), Grid2D(64))
    _, _, history, snaps = evolve_with_history(omega, SolverConfig(t_end=0.5, holder_alpha=None))
    return omega, history, snaps


class TestBilinear:
    def test_exact_on_nodes(self, rng):
        g = Grid2D(16)
        v = rng.standard_normal((16, 16))
        X, Y = g.mesh()
        assert np.allclose(bilinear(v, g, X.ravel(), Y.ravel()), v.ravel())

    def test_periodic_wrap(self, rng):
        g = Grid2D(16)
        v = rng.standard_normal((16, 16))
        x, y = np.array([0.3, 1.7]), np.array([2.2, 5.9])
        L = g.box_length
        assert np.allclose(bilinear(v, g, x + L, y - 2 * L), bilinear(v, g, x, y))


class TestHistory:
    def test_needs_two_frames(self):
        g = Grid2D(8)
        u = uniform_flow(g, 1, 0).frames[0]
        with pytest.raises(ValueError):
            VelocityHistory(g, [0.0], (u,))

    def test_times_increasing(self):
        g = Grid2D(8)
        u = uniform_flow(g, 1, 0).frames[0]
        with pytest.raises(ValueError):
            VelocityHistory(g, [0.0, 0.0], (u, u))

    def test_rejects_divergent_frames(self):
        g = Grid2D(16)
        X, _ = g.mesh()
        u = VectorField(g, RealField(g, np.sin(X)), RealField.zeros(g))
        with pytest.raises(ValueError, match="divergence"):
            VelocityHistory.steady(u, 1.0)

    def test_time_interpolation(self):
        g = Grid2D(8)
        a, b = uniform_flow(g, 1, 0).frames[0], uniform_flow(g, 3, 0).frames[0]
        h = VelocityHistory(g, [0.0, 1.0], (a, b))
        ux, _ = h.velocity(0.25, np.array([0.1]), np.array([0.2]))
        assert ux[0] == pytest.approx(1.5)


class TestIntegrate:
    def test_uniform_translation(self):
        g = Grid2D(16)
        h = uniform_flow(g, 0.7, -0.2)
        P = np.array([[1.0, 2.0], [3.0, 0.5]])
        out = integrate(h, P, 1.0, 0.0)
        assert np.allclose(out, P - [0.7, -0.2])

    def test_outside_range(self):
        g = Grid2D(16)
        with pytest.raises(ValueError):
            integrate(uniform_flow(g, 1, 0), np.zeros((1, 2)), 2.0, 0.0)

    def test_rigid_rotation_cell(self):
        # steady single-mode shear: u = (0, sin x) moves points along y only
        g = Grid2D(64)
        u = biot_savart(RealField.from_function(g, lambda x, y: np.cos(x)))
        h = VelocityHistory.steady(u, 1.0)
        P = np.array([[1.0, 1.0], [2.5, 4.0]])
        out = integrate(h, P, 1.0, 0.0)
        assert np.allclose(out[:, 0], P[:, 0])
        assert np.allclose(out[:, 1], P[:, 1] - np.sin(P[:, 0]), atol=1e-3)

    def test_forward_backward(self, dipole_run):
        _, history, _ = dipole_run
        rng = np.random.default_rng(0)
        P = rng.uniform(0, history.grid.box_length, size=(50, 2))
        there = integrate(history, P, 0.0, 0.5)
        back = integrate(history, there, 0.5, 0.0)
        assert np.max(np.abs(back - P)) < 1e-6

    def test_group_property(self, dipole_run):
        _, history, _ = dipole_run
        rng = np.random.default_rng(1)
        P = rng.uniform(0, history.grid.box_length, size=(50, 2))
        direct = integrate(history, P, 0.5, 0.0)
        split = integrate(history, integrate(history, P, 0.5, 0.25), 0.25, 0.0)
        assert np.max(np.abs(direct - split)) < 1e-6


class TestChecks:
    def test_identity_at_zero(self, dipole_run):
        omega, history, _ = dipole_run
        assert check_lagrangian_representation(omega, history, omega, 0.0) <= 1e-12

    def test_representation_small(self, dipole_run):
        omega, history, snaps = dipole_run
        t = history.t_max
        err = check_lagrangian_representation(omega, history, snaps[t], t)
        assert err / lp_norm(snaps[t], 2) < 0.1

    def test_grid_mismatch(self, dipole_run):
        omega, history, _ = dipole_run
        with pytest.raises(ValueError):
            check_lagrangian_representation(RealField.zeros(Grid2D(8)), history, omega, 0.0)

    def test_area_ratio_identity_at_zero(self, dipole_run):
        _, history, _ = dipole_run
        cell = np.array([[1.0, 1.0], [1.4, 1.0], [1.4, 1.3], [1.0, 1.3]])
        assert incompressibility_check(history, 0.0, cell) == 1.0

    def test_rigid_rotation_preserves_area(self):
        g = Grid2D(64)
        X, Y = g.mesh()
        L = g.box_length
        u = VectorField(g, RealField(g, -(Y - L / 2)), RealField(g, X - L / 2))
        h = VelocityHistory(g, [0.0, 1.0], (u, u), check_divergence=False)
        cell = np.array([L / 2 + 0.3, L / 2 - 0.2]) + 0.2 * np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert abs(incompressibility_check(h, 0.5, cell) - 1) < 1e-10

    def test_taylor_green_cells(self):
        g = Grid2D(64)
        omega = generate_initial_data(InitialDataSpec("taylor_green"), g)
        _, _, history, _ = evolve_with_history(omega, SolverConfig(t_end=1.0, holder_alpha=None))
        rng = np.random.default_rng(0)
        unit = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
        worst = max(abs(incompressibility_check(history, 1.0, c + 4 * g.spacing * unit) - 1)
                    for c in rng.uniform(0, g.box_length, size=(100, 2)))
        assert worst < 1e-3

    def test_degenerate_cell(self, dipole_run):
        _, history, _ = dipole_run
        with pytest.raises(ValueError):
            incompressibility_check(history, 0.1, np.array([[0, 0], [1, 1], [2, 2]]))

    def test_polygon_area_orientation(self):
        sq = np.array([[0, 0], [2, 0], [2, 1], [0, 1]], dtype=float)
        assert polygon_area(sq) == 2.0
        assert polygon_area(sq[::-1]) == -2.0


class TestFlowSample:
    def test_wrapped_preimages_and_csv(self):
        g = Grid2D(16)
        s = backward_flow(uniform_flow(g, 1.0, 0.0), 1.0, np.array([[0.5, 0.5]]))
        assert 0 <= s.preimages[0, 0] < g.box_length
        assert s.preimages_unwrapped[0, 0] == pytest.approx(-0.5)
        lines = s.to_csv().splitlines()
        assert lines[0] == "x,y,X0x,X0y" and len(lines) == 2

    def test_nonfinite_points(self):
        with pytest.raises(ValueError):
            backward_flow(uniform_flow(Grid2D(8), 1, 0), 0.5, np.array([[math.nan, 0.0]]))
