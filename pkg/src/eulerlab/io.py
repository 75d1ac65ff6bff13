"""On-disk formats: binary/CSV fields, checkpoints and velocity-history directories.

Binary field layout (little-endian): magic ``b"ELF2"``, ``u32 n``, ``f64 L``,
then ``n * n`` ``f64`` samples in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .spectral_core import Grid2D, RealField, VectorField

MAGIC = b"ELF2"
_HEADER = struct.Struct("<4sId")


class FormatError(ValueError):
    pass


def field_to_bytes(f: RealField) -> bytes:
    g = f.grid
    return _HEADER.pack(MAGIC, g.n, g.box_length) + f.values.astype("<f8").tobytes(order="C")


def field_from_bytes(data: bytes) -> RealField:
    if len(data) < _HEADER.size:
        raise FormatError("truncated field header")
    magic, n, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise FormatError(f"field payload has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    return RealField(Grid2D(n, L), values)


def write_field(path, f: RealField) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def read_field(path) -> RealField:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(path, f: RealField) -> None:
    lines = [",".join(repr(float(v)) for v in row) for row in f.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path, box_length: float = 2.0 * np.pi) -> RealField:
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    if values.shape[0] != values.shape[1]:
        raise FormatError(f"CSV field must be square, got {values.shape}")
    return RealField(Grid2D(values.shape[0], box_length), values)


def load_any_field(path, box_length: float = 2.0 * np.pi) -> RealField:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_field_csv(path, box_length)
    return read_field(path)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_checkpoint(directory, name: str, omega: RealField, t: float, config: dict) -> Path:
    """Write ``name.bin`` plus the ``name.json`` sidecar ``{t, L, n, config}``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_field(directory / f"{name}.bin", omega)
    _dump_json(directory / f"{name}.json",
               {"t": float(t), "L": omega.grid.box_length, "n": omega.grid.n, "config": config})
    return directory / f"{name}.bin"


def read_checkpoint(path) -> tuple[RealField, dict]:
    path = Path(path)
    omega = read_field(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta["n"] != omega.grid.n or meta["L"] != omega.grid.box_length:
        raise FormatError(f"sidecar of {path.name} does not match the field header")
    return omega, meta


def write_history(directory, history) -> None:
    """Store a velocity history as frame files plus ``index.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, (t, frame) in enumerate(zip(history.times, history.frames)):
        ux, uy = f"ux_{k:05d}.bin", f"uy_{k:05d}.bin"
        write_field(directory / ux, frame.x_component)
        write_field(directory / uy, frame.y_component)
        entries.append({"t": float(t), "ux": ux, "uy": uy})
    _dump_json(directory / "index.json",
               {"n": history.grid.n, "L": history.grid.box_length, "frames": entries})


def read_history(directory):
    from .flow_map import VelocityHistory

    directory = Path(directory)
    index_path = directory / "index.json"
    if not index_path.exists():
        raise FileNotFoundError(f"no velocity history index in {directory}")
    index = json.loads(index_path.read_text())
    grid = Grid2D(index["n"], index["L"])
    times, frames = [], []
    for entry in index["frames"]:
        ux, uy = directory / entry["ux"], directory / entry["uy"]
        if not (ux.exists() and uy.exists()):
            raise FileNotFoundError(f"missing velocity frame for t = {entry['t']}")
        frames.append(VectorField(grid, read_field(ux), read_field(uy)))
        times.append(entry["t"])
    return VelocityHistory(grid, np.array(times), tuple(frames))
