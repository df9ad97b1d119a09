"""Plot-ready exports: legacy ASCII VTK structured grids, CSV and JSON.

All writers go through :func:`atomic_write` (temporary file plus
``os.replace``) so a reader never sees a half-written artifact.  Numbers are
printed with ``repr`` so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .calculus import ScalarField, VectorField
from .report import GridSpec


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class GridData:
    """Point data on a full ``nu x nv x nw`` chart grid.

    ``valid`` marks points outside the excluded set; values at invalid points
    are zero.
    """

    spec: GridSpec
    uvw: np.ndarray               # (3, nu, nv, nw)
    xyz: np.ndarray               # (3, nu, nv, nw)
    valid: np.ndarray             # (nu, nv, nw) bool
    vectors: Mapping[str, np.ndarray]   # name -> (3, nu, nv, nw), Cartesian components
    scalars: Mapping[str, np.ndarray]   # name -> (nu, nv, nw)


def sample_grid(spec: GridSpec, vectors: Mapping[str, VectorField] | None = None,
                scalars: Mapping[str, ScalarField] | None = None) -> GridData:
    """Evaluate fields on every grid point that survives exclusion."""
    vectors = dict(vectors or {})
    scalars = dict(scalars or {})
    fields = list(vectors.values()) + list(scalars.values())
    if not fields:
        raise ValueError("nothing to sample")
    chart = fields[0].chart
    U, V, W = np.meshgrid(*spec.axes(), indexing="ij")
    eps = chart.eps if spec.eps is None else spec.eps
    valid = chart.inside(U, V, W) & ~chart.singular(U, V, W, eps)
    u, v, w = U[valid], V[valid], W[valid]
    xyz = np.zeros((3,) + U.shape)
    if valid.any():
        xyz[:, valid] = np.stack(chart.to_cartesian(u, v, w))
    vec_out = {}
    for name, f in vectors.items():
        arr = np.zeros((3,) + U.shape)
        if valid.any():
            arr[:, valid] = f.cartesian(u, v, w)
        vec_out[name] = arr
    sc_out = {}
    for name, f in scalars.items():
        arr = np.zeros(U.shape)
        if valid.any():
            arr[valid] = f(u, v, w)
        sc_out[name] = arr
    return GridData(spec, np.stack([U, V, W]), xyz, valid, vec_out, sc_out)


def _fortran(a: np.ndarray) -> np.ndarray:
    # VTK wants the first index varying fastest
    return np.asarray(a).ravel(order="F")


def vtk_structured_grid(data: GridData, title: str = "magsurf") -> str:
    nu, nv, nw = data.valid.shape
    n = nu * nv * nw
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\n")
    out.write(title.replace("\n", " ")[:255] + "\n")
    out.write("ASCII\nDATASET STRUCTURED_GRID\n")
    out.write(f"DIMENSIONS {nu} {nv} {nw}\n")
    out.write(f"POINTS {n} double\n")
    px, py, pz = (_fortran(data.xyz[k]) for k in range(3))
    for i in range(n):
        out.write(f"{_num(px[i])} {_num(py[i])} {_num(pz[i])}\n")
    out.write(f"POINT_DATA {n}\n")
    out.write("SCALARS valid int 1\nLOOKUP_TABLE default\n")
    for x in _fortran(data.valid.astype(int)):
        out.write(f"{int(x)}\n")
    for name in sorted(data.scalars):
        out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
        for x in _fortran(data.scalars[name]):
            out.write(_num(x) + "\n")
    for name in sorted(data.vectors):
        out.write(f"VECTORS {name} double\n")
        vx, vy, vz = (_fortran(data.vectors[name][k]) for k in range(3))
        for i in range(n):
            out.write(f"{_num(vx[i])} {_num(vy[i])} {_num(vz[i])}\n")
    return out.getvalue()


def grid_csv(data: GridData) -> str:
    """One row per valid point: chart and Cartesian coordinates, then fields."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    vnames = sorted(data.vectors)
    snames = sorted(data.scalars)
    header = ["u", "v", "w", "x", "y", "z"]
    for name in vnames:
        header += [f"{name}_x", f"{name}_y", f"{name}_z"]
    header += snames
    wr.writerow(header)
    idx = np.argwhere(data.valid)
    for i, j, k in idx:
        row = [*data.uvw[:, i, j, k], *data.xyz[:, i, j, k]]
        for name in vnames:
            row += list(data.vectors[name][:, i, j, k])
        row += [data.scalars[name][i, j, k] for name in snames]
        wr.writerow([_num(x) for x in row])
    return buf.getvalue()


def points_csv(columns: Mapping[str, np.ndarray]) -> str:
    """CSV of equally long 1-D columns."""
    names = list(columns)
    cols = [np.ravel(np.asarray(columns[n], dtype=float)) for n in names]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(names)
    for row in zip(*cols):
        wr.writerow([_num(x) for x in row])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")
