"""File formats for grids and reports: CSV, PGRD binary, JSON.

All writers are byte-deterministic: floats are written with ``repr`` and JSON
keys are sorted.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .analysis import GridSpec, PhaseGrid

__all__ = [
    "PGRD_MAGIC",
    "PGRD_HEADER_BYTES",
    "grid_to_csv",
    "write_grid_csv",
    "read_grid_csv",
    "grid_to_pgrd",
    "write_pgrd",
    "read_pgrd",
    "dumps_json",
    "write_json",
]

PGRD_MAGIC = b"PGRD"
PGRD_HEADER_BYTES = 808


def _fmt(v: float) -> str:
    return repr(float(v))


def grid_to_csv(grid: PhaseGrid) -> bytes:
    """CSV text with header ``x,p,value``; p-major, x varying fastest."""
    x, p, vals = grid.x, grid.p, grid.values
    lines = ["x,p,value"]
    for ip in range(grid.np):
        ps = _fmt(p[ip])
        for ix in range(grid.nx):
            lines.append(f"{_fmt(x[ix])},{ps},{_fmt(vals[ip, ix])}")
    return ("\n".join(lines) + "\n").encode("ascii")


def write_grid_csv(grid: PhaseGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(grid_to_csv(grid))


def read_grid_csv(path, quantity: str = "wigner") -> PhaseGrid:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(data[:, 0])
    ps = np.unique(data[:, 1])
    spec = GridSpec(xs[0], xs[-1], ps[0], ps[-1], xs.size, ps.size)
    return PhaseGrid(spec, data[:, 2].reshape(ps.size, xs.size), quantity)


def grid_to_pgrd(grid: PhaseGrid) -> bytes:
    """Magic, 808-byte space-padded JSON header, then little-endian float64 rows."""
    header = dict(grid.spec.to_dict(), quantity=grid.quantity, dtype="<f8", order="row-major[p][x]")
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    if len(text) > PGRD_HEADER_BYTES:
        raise ValueError("PGRD header does not fit in its fixed size")
    body = np.ascontiguousarray(grid.values, dtype="<f8").tobytes()
    return PGRD_MAGIC + text.ljust(PGRD_HEADER_BYTES, b" ") + body


def write_pgrd(grid: PhaseGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(grid_to_pgrd(grid))


def read_pgrd(path) -> PhaseGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != PGRD_MAGIC:
        raise ValueError(f"{path}: not a PGRD file")
    header = json.loads(raw[4 : 4 + PGRD_HEADER_BYTES].decode("ascii"))
    spec = GridSpec(header["x_min"], header["x_max"], header["p_min"], header["p_max"], header["nx"], header["np"])
    body = raw[4 + PGRD_HEADER_BYTES :]
    expected = spec.nx * spec.np * 8
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").reshape(spec.np, spec.nx)
    return PhaseGrid(spec, vals, header.get("quantity", "wigner"))


def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_json(obj) -> bytes:
    return (json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_json(obj, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_json(obj))
