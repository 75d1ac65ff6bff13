"""``eulerlab`` command line: evolve, stability, theorem1, flowcheck, boxcheck, norms.

Exit codes: 0 success, 1 a check failed, 2 invalid config or input,
3 numerical abort. Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import NumericalInstability, evolve_with_history
from .flow_map import check_lagrangian_representation
from .io import FormatError, load_any_field, read_checkpoint, read_history, write_checkpoint, write_field, write_history
from .norms import lp_norm, norm_report
from .stability_lab import box_doubling_check, generate_initial_data, run_family, theorem1_experiment

log = logging.getLogger("eulerlab")

BOX_DOUBLING_RTOL = 0.01


class InputError(ValueError):
    pass


def _clean(obj):
    """Replace non-finite floats by None so reports are strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class Run:
    """Output directory of one command plus its manifest bookkeeping."""

    def __init__(self, command: str, out: Path, args, cfg: ExperimentConfig | None):
        self.command, self.out, self.args, self.cfg = command, out, args, cfg
        self.outputs: list[str] = []
        self.start = time.time()
        out.mkdir(parents=True, exist_ok=True)
        if cfg is not None:
            self.write_text("config.ini", cfg.to_ini())

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return p

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text)

    def write_json(self, name: str, obj) -> None:
        self.write_text(name, _dump(obj))

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config_path": self.args.config,
            "config_sha256": None if self.cfg is None else self.cfg.sha256(),
            "seed": None if self.cfg is None else self.cfg.data.seed,
            "tool_version": __version__,
            "start_time": self.start,
            "end_time": time.time(),
            "outputs": sorted(set(self.outputs)),
        }
        (self.out / "manifest.json").write_text(_dump(manifest))


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("EULERLAB_WORKERS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"EULERLAB_WORKERS must be an integer, got {env!r}", "EULERLAB_WORKERS") from None


def _config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}", item)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["data.seed"] = str(args.seed)
    if args.freeze:
        overrides["solver.freeze"] = "true"
    return load_config(args.config, overrides)


def _out(args, command: str) -> Path:
    return Path(args.out) if args.out else Path("runs") / command


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_evolve(args) -> int:
    cfg = _config(args)
    run = Run("evolve", _out(args, "evolve"), args, cfg)
    omega0 = generate_initial_data(cfg.data, cfg.grid)
    state, ledger, history, snapshots = evolve_with_history(omega0, cfg.solver)
    meta = cfg.as_dict()
    times = sorted(snapshots)
    keep = range(len(times)) if cfg.save_history else (0, len(times) - 1)
    for k in keep:
        write_checkpoint(run.out / "checkpoints", f"omega_{k:05d}", snapshots[times[k]], times[k], meta)
        run.outputs += [f"checkpoints/omega_{k:05d}.bin", f"checkpoints/omega_{k:05d}.json"]
    if cfg.save_history:
        write_history(run.out / "history", history)
        run.outputs.append("history/index.json")
    write_field(run.path("final.bin"), state.omega)
    run.write_text("ledger.csv", ledger.to_csv())
    drift = {name: ledger.relative_drift(name) for name in ("l2", "energy")}
    run.write_json("evolve.json", {"t_end": state.t, "relative_drift": drift})
    run.finish()
    print(_dump({"t_end": state.t, "relative_drift": drift}), end="")
    return 0


def cmd_stability(args) -> int:
    cfg = _config(args)
    run = Run("stability", _out(args, "stability"), args, cfg)
    family = run_family(cfg.data, cfg.perturbation, cfg.deltas, cfg.effective_beta, cfg.solver, cfg.grid,
                        workers=_workers(args))
    for i, report in enumerate(family.reports):
        run.write_text(f"runs/delta_{i:02d}.csv", report.to_csv())
        run.write_json(f"runs/delta_{i:02d}.json", report.summary())
    fit = family.fit
    if fit is not None:
        fit = dict(fit, passes=bool(fit["gamma_fit"] >= fit["gamma_theory"] - 0.05 and fit["r2"] >= 0.95))
    run.write_json("fit.json", fit if fit is not None else {"skipped": "fewer than 3 deltas"})
    flagged = [r.delta for r in family.reports if r.flagged]
    summary = {"n_runs": len(family.reports), "flagged_deltas": flagged, "fit": fit,
               "runs": [r.summary() for r in family.reports]}
    run.write_json("summary.json", summary)
    run.finish()
    print(_dump({"fit": fit, "flagged_deltas": flagged}), end="")
    return 1 if flagged else 0


def cmd_theorem1(args) -> int:
    cfg = _config(args)
    run = Run("theorem1", _out(args, "theorem1"), args, cfg)
    report = theorem1_experiment(cfg.data, cfg.approximation, cfg.approx_params, cfg.solver, cfg.grid)
    run.write_text("refinement.csv", report.to_csv())
    sups = report.sup_errors
    result = {
        "approximation": report.kind,
        "nonincreasing": report.nonincreasing(),
        "contract_holds": report.contract_holds(),
        "final_over_first": float(sups[-1] / sups[0]) if sups[0] > 0 else 0.0,
        "rows": [dict(zip(("parameter", "initial_l2", "sup_l2"), r)) for r in report.rows],
    }
    run.write_json("theorem1.json", result)
    run.finish()
    print(_dump(result), end="")
    return 0 if result["nonincreasing"] else 1


def cmd_boxcheck(args) -> int:
    cfg = _config(args)
    run = Run("boxcheck", _out(args, "boxcheck"), args, cfg)
    dist = box_doubling_check(cfg.data, cfg.solver, cfg.grid)
    scale = lp_norm(generate_initial_data(cfg.data, cfg.grid), 2)
    rel = dist / scale if scale > 0 else 0.0
    result = {"discrepancy_l2": dist, "initial_l2": scale, "relative": rel, "bound": BOX_DOUBLING_RTOL,
              "passed": rel <= BOX_DOUBLING_RTOL}
    run.write_json("boxcheck.json", result)
    run.finish()
    print(_dump(result), end="")
    return 0 if result["passed"] else 1


def _checkpoint_at(directory: Path, t: float):
    for sidecar in sorted((directory / "checkpoints").glob("omega_*.json")):
        meta = json.loads(sidecar.read_text())
        if abs(meta["t"] - t) <= 1e-9 * max(1.0, abs(t)):
            return read_checkpoint(sidecar.with_suffix(".bin"))
    raise InputError(f"no vorticity checkpoint at t = {t} in {directory}")


def cmd_flowcheck(args) -> int:
    directory = Path(args.checkpoint_dir)
    history = read_history(directory / "history")
    t = history.t_max if args.t is None else float(args.t)
    if not 0.0 <= t <= history.t_max + 1e-12:
        raise InputError(f"t = {t} outside the recorded range [0, {history.t_max}]")
    omega_bar, _ = _checkpoint_at(directory, 0.0)
    omega_t, meta = _checkpoint_at(directory, t)
    bound = args.bound if args.bound is not None else meta["config"].get("flow_bound", 1e-2)
    err = check_lagrangian_representation(omega_bar, history, omega_t, meta["t"])
    scale = lp_norm(omega_t, 2)
    rel = err / scale if scale > 0 else err
    result = {"t": meta["t"], "error_l2": err, "relative": rel, "bound": bound, "passed": rel <= bound}
    out = Path(args.out) if args.out else directory
    out.mkdir(parents=True, exist_ok=True)
    (out / f"flowcheck_t{meta['t']:.6f}.json").write_text(_dump(result))
    print(_dump(result), end="")
    return 0 if result["passed"] else 1


def cmd_norms(args) -> int:
    f = load_any_field(args.field, args.box_length)
    beta = args.beta
    rep = norm_report(f, beta=beta, alpha=args.alpha)
    result = rep.to_json(beta)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "norms.json").write_text(_dump(result))
    print(_dump(result), end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--out", help="output directory (default runs/<command>)")
    common.add_argument("--seed", type=int, help="override [data] seed")
    common.add_argument("--workers", type=int, help="worker processes (fallback: EULERLAB_WORKERS)")
    common.add_argument("--freeze", action="store_true", help="replace the solver by the identity map")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="config override")

    parser = argparse.ArgumentParser(prog="eulerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eulerlab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("evolve", parents=[common], help="integrate one initial vorticity").set_defaults(fn=cmd_evolve)
    sub.add_parser("stability", parents=[common], help="perturbed-pair family over the delta ladder") \
        .set_defaults(fn=cmd_stability)
    sub.add_parser("theorem1", parents=[common], help="approximation refinement study").set_defaults(fn=cmd_theorem1)
    sub.add_parser("boxcheck", parents=[common], help="box-doubling periodization check").set_defaults(fn=cmd_boxcheck)

    p = sub.add_parser("flowcheck", parents=[common], help="Lagrangian representation from an evolve output")
    p.add_argument("checkpoint_dir")
    p.add_argument("--t", type=float, help="check time (default: last recorded time)")
    p.add_argument("--bound", type=float, help="relative error bound (default: config flow_bound)")
    p.set_defaults(fn=cmd_flowcheck)

    p = sub.add_parser("norms", parents=[common], help="norm table of a field file (.bin or .csv)")
    p.add_argument("field")
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=None, help="also report the Hölder seminorm")
    p.add_argument("--box-length", type=float, default=2.0 * math.pi, help="box length for CSV input")
    p.set_defaults(fn=cmd_norms)
    return parser


def _fail(code: int, payload: dict) -> int:
    print(json.dumps(_clean(payload), sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        return _fail(2, exc.to_json())
    except (InputError, FormatError, FileNotFoundError) as exc:
        return _fail(2, {"error": "invalid_input", "message": str(exc)})
    except NumericalInstability as exc:
        return _fail(3, {"error": "numerical_instability", "t": exc.t, "message": str(exc)})
    except ValueError as exc:
        return _fail(2, {"error": "invalid_input", "message": str(exc)})


if __name__ == "__main__":
    sys.exit(main())
