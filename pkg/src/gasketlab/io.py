"""Deterministic PLY, CSV and JSON writers.

Floats are written with ``repr`` so identical inputs give identical bytes.
A path of ``"-"`` writes to standard output.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .gasket import SGFunction


@contextlib.contextmanager
def _open(dest, newline=None):
    if dest == "-" or dest is None:
        yield sys.stdout
        return
    if hasattr(dest, "write"):
        yield dest
        return
    path = Path(dest)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline=newline) as fh:
        yield fh


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def ply_text(f: SGFunction, z_scale: float = 1.0) -> str:
    """ASCII PLY with vertices ``(x, y, z_scale * f)`` and one face per cell."""
    g = f.graph
    buf = io.StringIO()
    buf.write("ply\nformat ascii 1.0\ncomment gasketlab level {}\n".format(g.level))
    buf.write(f"element vertex {g.n_vertices}\n")
    buf.write("property double x\nproperty double y\nproperty double z\n")
    buf.write(f"element face {len(g.cells)}\n")
    buf.write("property list uchar int vertex_indices\nend_header\n")
    z = f.values * z_scale
    for (x, y), v in zip(g.coords.tolist(), z.tolist()):
        buf.write(f"{x!r} {y!r} {v!r}\n")
    for a, b, c in g.cells.tolist():
        buf.write(f"3 {a} {b} {c}\n")
    return buf.getvalue()


def write_ply(dest, f: SGFunction, z_scale: float = 1.0) -> None:
    with _open(dest) as fh:
        fh.write(ply_text(f, z_scale))


def write_csv(dest, header, rows) -> None:
    """RFC 4180 CSV (CRLF line endings, minimal quoting)."""
    with _open(dest, newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool) else v for v in row])


def mesh_rows(f: SGFunction):
    g = f.graph
    for i, ((x, y), v) in enumerate(zip(g.coords.tolist(), f.values.tolist())):
        yield i, x, y, v, g.level


def write_mesh_csv(dest, f: SGFunction) -> None:
    write_csv(dest, ["id", "x", "y", "value", "level"], mesh_rows(f))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, ensure_ascii=False, indent=2, allow_nan=True) + "\n"


def write_json(dest, obj) -> None:
    with _open(dest) as fh:
        fh.write(json_text(obj))


def write_surface(dest, f: SGFunction, z_scale: float = 1.0) -> None:
    """Write ``f`` as PLY or CSV depending on the file suffix (PLY for stdout)."""
    if isinstance(dest, (str, Path)) and str(dest).lower().endswith(".csv"):
        write_mesh_csv(dest, f)
    else:
        write_ply(dest, f, z_scale)
