"""Binary field snapshots and deterministic CSV reports.

Snapshot format: one JSON header line (utf-8, terminated by a newline)
followed by the raw row-major float64 little-endian payload.  The header
carries the grid, an optional time stamp and free-form metadata; the
payload is bit-exact under a dump/load round trip.  Creation timestamps
live in the header only, never in the payload.
"""

import csv
import json
import time

import numpy as np

from .errors import SnapshotFormatError
from .fields import StripField, SurfaceField

_MAGIC = "stripwaves-field"


def _grid_header(grid):
    return {"Lx": grid.Lx, "Ly": grid.Ly, "Nx": grid.Nx, "Ny": grid.Ny,
            "Nz": grid.Nz}


def dump_field(field, path, meta=None, sim_time=None):
    """Write a surface or strip field; returns the header dict."""
    kind = "strip" if isinstance(field, StripField) else "surface"
    header = {
        "magic": _MAGIC,
        "version": 1,
        "kind": kind,
        "shape": list(field.values.shape),
        "grid": _grid_header(field.grid),
        "time": sim_time,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return header


def load_field(path, grid=None):
    """Read a snapshot; returns (field, header).

    Raises SnapshotFormatError on a bad magic/version, a payload length
    that disagrees with the declared shape, or (when ``grid`` is given) a
    grid mismatch.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotFormatError(f"unreadable header in {path}: {exc}")
    if header.get("magic") != _MAGIC or header.get("version") != 1:
        raise SnapshotFormatError(f"not a stripwaves snapshot: {path}")
    shape = tuple(header["shape"])
    expected = int(np.prod(shape)) * 8
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, header declares {expected}")
    vals = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    if grid is not None:
        if header["grid"] != _grid_header(grid):
            raise SnapshotFormatError(
                f"snapshot grid {header['grid']} does not match "
                f"{_grid_header(grid)}")
        field = (StripField(vals, grid) if header["kind"] == "strip"
                 else SurfaceField(vals, grid))
        return field, header
    return vals, header


def fmt(x):
    """Deterministic float formatting for reports (%.17g round-trips)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
