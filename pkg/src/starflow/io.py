"""Serialization of run output: time-series CSV, meshes and run manifests."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from contextlib import contextmanager

import numpy as np

from . import __version__
from .geometry import ShapeGeometry

BASE_COLUMNS = (
    "t", "dt", "osc_rho", "min_rho", "max_rho", "min_u", "max_u",
    "min_F", "max_F", "max_A2", "admiss_margin", "af_ratio",
)


class MeshExportError(ValueError):
    """Geometry cannot be written as a mesh (non-finite vertex)."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


def timeseries_header(n: int) -> list[str]:
    return list(BASE_COLUMNS) + [f"W{k}" for k in range(n + 2)]


def _fmt(x: float) -> str:
    # repr gives the shortest string that round-trips
    return repr(float(x))


@contextmanager
def _open_sink(sink, mode="w"):
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, mode, newline="", encoding="utf-8") as fh:
            yield fh
    else:
        yield sink


def write_timeseries(records, sink, n: int) -> None:
    """Write one CSV row per record under the fixed header for dimension ``n``."""
    rows = []
    for r in records:
        if len(r.W) != n + 2:
            raise ValueError(f"record carries {len(r.W)} quermassintegrals, expected {n + 2}")
        vals = [getattr(r, c) for c in BASE_COLUMNS] + list(r.W)
        rows.append([_fmt(v) for v in vals])
    with _open_sink(sink) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(timeseries_header(n))
        w.writerows(rows)


def read_timeseries(source) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a time-series CSV."""
    with _open_sink(source, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def _check_finite(points: np.ndarray, shape) -> None:
    bad = ~np.all(np.isfinite(points), axis=-1)
    if np.any(bad):
        node = tuple(int(i) for i in np.unravel_index(int(np.argmax(bad.ravel())), shape))
        raise MeshExportError(f"non-finite vertex at node {node}; mesh not written", node=node)


def mesh_text(geom: ShapeGeometry) -> str:
    """OBJ text (n=2) or ``x,y`` CSV text (n=1) of the boundary.

    The OBJ lists the grid vertices in row-major order followed by the north
    and south cap vertices, placed on the axis at the mean radius of the
    adjacent latitude ring. Faces are outward-oriented triangles.
    """
    grid = geom.grid
    x = geom.x_amb
    _check_finite(x, grid.shape)
    buf = _io.StringIO()
    if grid.dim == 1:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y"])
        w.writerows([[_fmt(p[0]), _fmt(p[1])] for p in x])
        return buf.getvalue()
    nt, nphi = grid.shape
    north = np.array([0.0, 0.0, float(np.mean(geom.rho[0]))])
    south = np.array([0.0, 0.0, -float(np.mean(geom.rho[-1]))])
    for p in list(x.reshape(-1, 3)) + [north, south]:
        buf.write(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
    idx = lambda j, k: j * nphi + (k % nphi) + 1  # noqa: E731  (OBJ is 1-based)
    for j in range(nt - 1):
        for k in range(nphi):
            a, b, c, d = idx(j, k), idx(j + 1, k), idx(j + 1, k + 1), idx(j, k + 1)
            buf.write(f"f {a} {b} {c}\nf {a} {c} {d}\n")
    npole, spole = nt * nphi + 1, nt * nphi + 2
    for k in range(nphi):
        buf.write(f"f {npole} {idx(0, k)} {idx(0, k + 1)}\n")
    for k in range(nphi):
        buf.write(f"f {idx(nt - 1, k + 1)} {idx(nt - 1, k)} {spole}\n")
    return buf.getvalue()


def export_mesh(geom: ShapeGeometry, sink) -> None:
    """Write the boundary mesh; nothing is written if any vertex is non-finite.

    Raises:
        MeshExportError: non-finite vertex (reports the node).
    """
    text = mesh_text(geom)
    with _open_sink(sink) as fh:
        fh.write(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_manifest(path, config_dict: dict, **sections) -> dict:
    """Write a JSON manifest with the resolved config, library version and extra sections."""
    doc = {"version": __version__, "config": config_dict}
    doc.update(sections)
    doc = _jsonable(doc)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
