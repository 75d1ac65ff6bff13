"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (about 5 minutes on one core).
"""

import hashlib
import json
import math

import numpy as np
import pytest

from eulerlab.cli import main
from eulerlab.dynamics import SolverConfig, biot_savart, evolve, evolve_with_history
from eulerlab.flow_map import check_lagrangian_representation
from eulerlab.norms import check_duality, check_interpolation, hs_norm, lp_norm
from eulerlab.spectral_core import Grid2D
from eulerlab.stability_lab import (
    DEFAULT_DELTAS,
    InitialDataSpec,
    PerturbationSpec,
    box_doubling_check,
    generate_initial_data,
    run_family,
    theorem1_experiment,
)

from conftest import random_zero_mean, single_mode

T1 = SolverConfig(t_end=1.0, holder_alpha=None)


@pytest.fixture
def verdict(capsys):
    def report(number: int, name: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}")
        assert ok, detail

    return report


@pytest.fixture(scope="module")
def holder_family():
    spec = InitialDataSpec("holder_patch_pair", alpha=0.5)
    return run_family(spec, PerturbationSpec("translate"), DEFAULT_DELTAS, 0.25, T1, Grid2D(256))


def test_01_duality(verdict):
    g = Grid2D(128)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        w = random_zero_mean(g, rng, decay=rng.uniform(0.0, 3.0))
        worst = max(worst, check_duality(w, biot_savart(w)) / hs_norm(w, -1.0))
    verdict(1, "duality identity", worst <= 1e-10, f"max relative gap {worst:.2e} (bound 1e-10)")


def test_02_interpolation(verdict):
    g = Grid2D(64)
    rng = np.random.default_rng(7)
    worst = math.inf
    for beta in (0.1, 0.25, 0.5):
        for _ in range(200):
            w = random_zero_mean(g, rng, decay=rng.uniform(0.0, 3.0))
            worst = min(worst, check_interpolation(w, beta) / lp_norm(w, 2))
    equality = max(abs(check_interpolation(single_mode(g, kx, ky), beta)) / lp_norm(single_mode(g, kx, ky), 2)
                   for beta in (0.1, 0.25, 0.5) for kx, ky in ((1, 0), (3, 4), (7, -2)))
    ok = worst >= -1e-10 and equality <= 1e-10
    verdict(2, "interpolation inequality", ok,
            f"min relative residual {worst:.3e}, single-mode equality defect {equality:.2e}")


def test_03_solver_fidelity(verdict):
    g = Grid2D(256)
    tg = generate_initial_data(InitialDataSpec("taylor_green"), g)
    state, _ = evolve(tg, T1)
    stationarity = lp_norm(state.omega - tg, 2) / lp_norm(tg, 2)
    dipole = generate_initial_data(InitialDataSpec("smooth_dipole"), g)
    _, ledger = evolve(dipole, T1)
    l2, energy = ledger.relative_drift("l2"), ledger.relative_drift("energy")
    ok = stationarity <= 1e-6 and l2 <= 1e-4 and energy <= 1e-4
    verdict(3, "solver fidelity", ok,
            f"TG change {stationarity:.2e}, dipole L2 drift {l2:.2e}, energy drift {energy:.2e}")


def test_04_lagrangian(verdict):
    g = Grid2D(512)
    tg = generate_initial_data(InitialDataSpec("taylor_green"), g)
    _, _, history, snaps = evolve_with_history(tg, T1)
    tg_err = check_lagrangian_representation(tg, history, snaps[1.0], 1.0) / lp_norm(tg, 2)
    errs = {}
    for n in (128, 256):
        grid = Grid2D(n)
        w = generate_initial_data(InitialDataSpec("smooth_dipole"), grid)
        _, _, history, snaps = evolve_with_history(w, T1)
        errs[n] = check_lagrangian_representation(w, history, snaps[1.0], 1.0) / lp_norm(w, 2)
    ok = tg_err <= 1e-4 and errs[256] <= 0.5 * errs[128] and errs[256] <= 1e-2
    verdict(4, "Lagrangian representation", ok,
            f"TG (n=512) {tg_err:.2e}; dipole n=128 {errs[128]:.2e}, n=256 {errs[256]:.2e} "
            f"(ratio {errs[128] / errs[256]:.2f})")


def test_05_chain(verdict, holder_family):
    failed = [(r.delta, k) for r in holder_family.reports for k, v in r.checks.items() if not v["passed"]]
    g = 0.25 / 1.25
    worst = min((row["chain_bound"] * (1 + 1e-9) - row["dw_l2"]) / row["chain_bound"]
                for r in holder_family.reports for row in r.rows)
    direct = all(row["dw_l2"] <= row["du_l2"] ** g * row["dw_hbeta"] ** (1 - g) * (1 + 1e-9)
                 for r in holder_family.reports for row in r.rows)
    ok = not failed and direct
    verdict(5, "stability chain", ok, f"failed checks {failed or 'none'}, min chain margin {worst:.3e}")


def test_06_rate(verdict, holder_family):
    fit = holder_family.fit
    ok = fit is not None and fit["gamma_fit"] >= fit["gamma_theory"] - 0.05 and fit["r2"] >= 0.95
    verdict(6, "stability rate", ok,
            f"gamma_fit {fit['gamma_fit']:.3f} (need >= {fit['gamma_theory'] - 0.05:.2f}), r2 {fit['r2']:.4f}")


def test_07_energy(verdict, holder_family):
    margins = [(row["energy_bound"] * (1 + 1e-6) - row["du_l2"]) / row["energy_bound"]
               for r in holder_family.reports for row in r.rows]
    ok = min(margins) >= 0
    verdict(7, "energy estimate", ok, f"min relative margin {min(margins):.3e} over {len(margins)} rows")


def test_08_theorem1(verdict):
    target = InitialDataSpec("holder_patch_pair", alpha=0.75)
    rep = theorem1_experiment(target, "mollification", [4.0, 2.0, 1.0], T1, Grid2D(256))
    sups = rep.sup_errors
    ratio = sups[-1] / sups[0]
    ok = rep.nonincreasing(0.1) and ratio <= 0.2
    verdict(8, "approximation convergence", ok,
            f"sup errors {', '.join(f'{s:.4f}' for s in sups)}; final/first {ratio:.3f} (bound 0.2)")


def test_09_box_doubling(verdict):
    g = Grid2D(256)
    spec = InitialDataSpec("smooth_dipole")
    rel = box_doubling_check(spec, T1, g) / lp_norm(generate_initial_data(spec, g), 2)
    verdict(9, "periodization control", rel <= 0.01, f"relative discrepancy {rel:.4f} (bound 0.01)")


def test_10_reproducibility(verdict, tmp_path):
    cfg = tmp_path / "holder.ini"
    cfg.write_text("[grid]\nn = 64\n[data]\nkind = holder_patch_pair\n[analysis]\nbeta = 0.25\n")
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["stability", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
        reports = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
        digests.append({p.relative_to(out).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest() for p in reports})
        manifest = json.loads((out / "manifest.json").read_text())
        digests[-1]["config_sha256"] = manifest["config_sha256"]
    ok = digests[0] == digests[1] and len(digests[0]) > 3
    verdict(10, "reproducibility", ok, f"{len(digests[0]) - 1} report files byte-identical: {ok}")
