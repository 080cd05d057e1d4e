"""Snapshot files: one JSON header line plus raw little-endian complex128 samples.

Layout::

    HOTFALL-SNAPSHOT 1\\n
    {"grid": ..., "time_ms": ..., "config_hash": ..., "payload_bytes": ...}\\n
    <payload: (re, im) float64 pairs, x index fastest>
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .grid import ComplexField, Grid3D

MAGIC = b"HOTFALL-SNAPSHOT 1\n"
UNITS = {"length": "um", "time": "ms", "amplitude": "um^-3/2"}


class SnapshotError(IOError):
    pass


def write_snapshot(path, f: ComplexField, time_ms: float = 0.0, config_hash: str = "", **extra) -> Path:
    path = Path(path)
    payload = np.asarray(f.data, dtype="<c16").ravel(order="F").tobytes()
    header = {
        "grid": f.grid.as_dict(),
        "time_ms": float(time_ms),
        "units": UNITS,
        "config_hash": config_hash,
        "dtype": "<f8 (re, im) pairs",
        "order": "x-fastest",
        "payload_bytes": len(payload),
    }
    header.update(extra)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)
    os.replace(tmp, path)
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return _header(fh, path)


def _header(fh, path) -> dict:
    if fh.readline() != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    try:
        header = json.loads(fh.readline())
    except ValueError as exc:
        raise SnapshotError(f"{path}: unreadable header") from exc
    if "grid" not in header or "payload_bytes" not in header:
        raise SnapshotError(f"{path}: header lacks grid/payload description")
    return header


def read_snapshot(path) -> tuple[ComplexField, dict]:
    with open(path, "rb") as fh:
        header = _header(fh, path)
        payload = fh.read()
    try:
        grid = Grid3D.from_dict(header["grid"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"{path}: bad grid in header ({exc})") from exc
    expected = 16 * grid.size
    if header["payload_bytes"] != expected or len(payload) != expected:
        raise SnapshotError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<c16").reshape(grid.shape, order="F")
    return ComplexField(grid, data.astype(np.complex128)), header


def write_vtk(path, f: ComplexField, name: str = "density") -> Path:
    """Density as a legacy binary VTK structured-points volume (ParaView, VisIt, Mayavi)."""
    path = Path(path)
    g = f.grid
    x0, y0, z0 = g.axis(0)[0], g.axis(1)[0], g.axis(2)[0]
    head = (
        "# vtk DataFile Version 3.0\n"
        f"{name}\nBINARY\nDATASET STRUCTURED_POINTS\n"
        f"DIMENSIONS {g.nx} {g.ny} {g.nz}\n"
        f"ORIGIN {x0:.10g} {y0:.10g} {z0:.10g}\n"
        f"SPACING {g.dx:.10g} {g.dy:.10g} {g.dz:.10g}\n"
        f"POINT_DATA {g.size}\nSCALARS {name} double 1\nLOOKUP_TABLE default\n"
    )
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(np.asarray(f.density(), dtype=">f8").ravel(order="F").tobytes())
        fh.write(b"\n")
    return path
