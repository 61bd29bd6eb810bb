"""SPGRID v1 grid files and deterministic JSON reports.

An SPGRID file is one ASCII header line

    SPGRID 1 <m> <d> <N_1> ... <N_m> <kind>

followed by little-endian float64 values, row-major over grid points, with
``d`` components per point and complex numbers stored as (re, im) pairs.
Spinor fields are complex, every other kind is real. Metadata may be kept
in a JSON sidecar next to the file (``<file>.json``).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

KINDS = ("spinor", "metric", "symtensor", "vector", "oneform")
COMPLEX_KINDS = ("spinor",)
TIMING_KEYS = ("timings", "runtime_ms")


def write_spgrid(path: str | Path, values: np.ndarray, grid_shape: tuple[int, ...], kind: str, meta: dict | None = None) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    grid_shape = tuple(int(n) for n in grid_shape)
    values = np.asarray(values)
    if values.shape[: len(grid_shape)] != grid_shape:
        raise ValueError("values do not match the grid shape")
    d = int(np.prod(values.shape[len(grid_shape):], dtype=int))
    header = " ".join(["SPGRID", "1", str(len(grid_shape)), str(d), *map(str, grid_shape), kind]) + "\n"
    if kind in COMPLEX_KINDS:
        data = np.stack([values.real, values.imag], axis=-1)
    else:
        if np.iscomplexobj(values):
            raise ValueError(f"{kind} data must be real")
        data = values
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    if meta is not None:
        write_json(sidecar(path), meta)


def read_spgrid(path: str | Path) -> tuple[np.ndarray, str, dict | None]:
    """Return ``(values, kind, meta)``; values have shape ``(*grid, d)``."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) < 5 or header[0] != "SPGRID" or header[1] != "1":
            raise ValueError("not an SPGRID v1 file")
        m, d = int(header[2]), int(header[3])
        shape = tuple(int(x) for x in header[4 : 4 + m])
        kind = header[4 + m]
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    width = 2 * d if kind in COMPLEX_KINDS else d
    expected = math.prod(shape) * width
    if raw.size != expected:
        raise ValueError(f"expected {expected} values, found {raw.size}")
    data = raw.reshape(shape + (width,)).astype(float)
    if kind in COMPLEX_KINDS:
        data = data.reshape(shape + (d, 2))
        data = data[..., 0] + 1j * data[..., 1]
    side = sidecar(path)
    meta = read_json(side) if side.exists() else None
    return data, kind, meta


def sidecar(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _clean(obj: Any) -> Any:
    """Make numpy scalars, arrays and complex numbers JSON-friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def strip_timings(obj: Any) -> Any:
    """Copy of a report without timing fields, for reproducibility checks."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj
