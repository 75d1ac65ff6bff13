"""INI experiment configuration.

Sections and keys (all optional)::

    [grid]          n, box_length
    [solver]        t_end, cfl, dealias, conservation_check_every,
                    samples_per_unit_time, holder_alpha (number or "none"), freeze
    [data]          kind, alpha, centers ("x y; x y"), radii, amplitudes, seed, jitter
    [perturbation]  mode, deltas, direction
    [analysis]      beta (defaults to alpha / 2), flow_bound, approximation, approx_params
    [output]        save_history

Lists are comma separated. Overrides given as ``section.key=value`` strings take
precedence over the file.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dynamics import SolverConfig
from .spectral_core import Grid2D
from .stability_lab import DEFAULT_DELTAS, InitialDataSpec, PerturbationSpec

SCHEMA = {
    "grid": ("n", "box_length"),
    "solver": ("t_end", "cfl", "dealias", "conservation_check_every", "samples_per_unit_time",
               "holder_alpha", "freeze"),
    "data": ("kind", "alpha", "centers", "radii", "amplitudes", "seed", "jitter"),
    "perturbation": ("mode", "deltas", "direction"),
    "analysis": ("beta", "flow_bound", "approximation", "approx_params"),
    "output": ("save_history",),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key

    def to_json(self) -> dict:
        return {"error": "invalid_config", "key": self.key, "message": str(self)}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _points(text: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            xy = _floats(chunk)
            if len(xy) != 2:
                raise ValueError(f"point {chunk.strip()!r} needs two coordinates")
            pts.append(xy)
    return tuple(pts)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(" ".join(repr(float(c)) for c in p) for p in v)
        return ", ".join(repr(float(c)) for c in v)
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid2D = field(default_factory=lambda: Grid2D(256))
    solver: SolverConfig = field(default_factory=SolverConfig)
    data: InitialDataSpec = field(default_factory=InitialDataSpec)
    perturbation: PerturbationSpec = field(default_factory=lambda: PerturbationSpec(delta=DEFAULT_DELTAS[0]))
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    beta: float | None = None
    flow_bound: float = 1e-2
    approximation: str = "mollification"
    approx_params: tuple[float, ...] = (4.0, 2.0, 1.0)
    save_history: bool = True

    @property
    def effective_beta(self) -> float:
        return self.data.alpha / 2.0 if self.beta is None else self.beta

    def to_ini(self) -> str:
        """Canonical text form; parsing it back yields an equal config."""
        d, s = self.data, self.solver
        sections = {
            "grid": {"n": self.grid.n, "box_length": float(self.grid.box_length)},
            "solver": {k: getattr(s, k) for k in SCHEMA["solver"]},
            "data": {"kind": d.kind, "alpha": d.alpha, "centers": d.centers, "radii": d.radii,
                     "amplitudes": d.amplitudes, "seed": d.seed, "jitter": d.jitter},
            "perturbation": {"mode": self.perturbation.mode, "deltas": self.deltas,
                             "direction": self.perturbation.direction},
            "analysis": {"beta": self.beta, "flow_bound": self.flow_bound,
                         "approximation": self.approximation, "approx_params": self.approx_params},
            "output": {"save_history": self.save_history},
        }
        lines = []
        for name, entries in sections.items():
            lines.append(f"[{name}]")
            lines += [f"{k} = {_fmt(v)}" for k, v in entries.items() if v is not None or k in ("beta", "holder_alpha")]
            lines.append("")
        return "\n".join(lines)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()

    def as_dict(self) -> dict:
        return {
            "grid": {"n": self.grid.n, "box_length": self.grid.box_length},
            "solver": asdict(self.solver),
            "data": asdict(self.data),
            "perturbation": asdict(self.perturbation),
            "deltas": list(self.deltas),
            "beta": self.effective_beta,
            "flow_bound": self.flow_bound,
            "approximation": self.approximation,
            "approx_params": list(self.approx_params),
            "save_history": self.save_history,
        }


def _parse(parser: configparser.ConfigParser) -> ExperimentConfig:
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", f"{section}.{key}")

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        try:
            if conv is bool:
                return parser.getboolean(section, key)
            if raw.lower() == "none" and key in ("holder_alpha", "beta", "centers", "radii", "amplitudes"):
                return None
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}", f"{section}.{key}") from None

    key = "grid"
    try:
        grid = Grid2D(get("grid", "n", int, 256), get("grid", "box_length", float, 2.0 * math.pi))
        key = "solver"
        sd = SolverConfig()
        solver = SolverConfig(
            t_end=get("solver", "t_end", float, sd.t_end),
            cfl=get("solver", "cfl", float, sd.cfl),
            dealias=get("solver", "dealias", bool, sd.dealias),
            conservation_check_every=get("solver", "conservation_check_every", int, 0),
            samples_per_unit_time=get("solver", "samples_per_unit_time", int, sd.samples_per_unit_time),
            holder_alpha=get("solver", "holder_alpha", float, sd.holder_alpha),
            freeze=get("solver", "freeze", bool, False),
        )
        key = "data"
        data = InitialDataSpec(
            kind=get("data", "kind", str, "smooth_dipole"),
            alpha=get("data", "alpha", float, 0.5),
            centers=get("data", "centers", _points, None),
            radii=get("data", "radii", _floats, None),
            amplitudes=get("data", "amplitudes", _floats, None),
            seed=get("data", "seed", int, 0),
            jitter=get("data", "jitter", float, 0.0),
        )
        data.resolved(grid)
        key = "perturbation"
        deltas = get("perturbation", "deltas", _floats, DEFAULT_DELTAS)
        if not deltas or any(not (math.isfinite(d) and d > 0) for d in deltas):
            raise ValueError("deltas must be a nonempty list of positive numbers")
        pert = PerturbationSpec(mode=get("perturbation", "mode", str, "translate"), delta=deltas[0],
                                direction=get("perturbation", "direction", _floats, (1.0, 0.0)))
        key = "analysis"
        beta = get("analysis", "beta", float, None)
        if beta is not None and not 0.0 < beta < data.alpha:
            raise ValueError(f"beta must lie in (0, alpha = {data.alpha}), got {beta}")
        flow_bound = get("analysis", "flow_bound", float, 1e-2)
        if not flow_bound >= 0:
            raise ValueError("flow_bound must be nonnegative")
        approximation = get("analysis", "approximation", str, "mollification")
        if approximation not in ("mollification", "truncation"):
            raise ValueError(f"unknown approximation {approximation!r}")
        approx_params = get("analysis", "approx_params", _floats, (4.0, 2.0, 1.0))
        key = "output"
        save_history = get("output", "save_history", bool, True)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), key) from None
    return ExperimentConfig(grid, solver, data, pert, tuple(deltas), beta, flow_bound,
                            approximation, tuple(approx_params), save_history)


def parse_config(text: str = "", overrides: dict[str, str] | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key", dotted)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))
    return _parse(parser)


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "path") from None
    return parse_config(text, overrides)
