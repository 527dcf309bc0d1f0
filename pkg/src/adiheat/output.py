"""Snapshot, trace and benchmark files.

Every file starts with one header line ``# adiheat <version> config_sha256=<hash>``
(in VTK files this is the title line, the second line of the file).  Floats
are written with 17 significant digits so that reading a file back gives
the exact values.

Snapshot CSV::

    # adiheat 0.1.0 config_sha256=...
    r,z,layer,T
    <one row per cell inside the domain, z-major then r>

Snapshot VTK: legacy ASCII ``STRUCTURED_GRID`` with one point per cell
centre (dimensions ``nr nz 1``, points ordered r fastest) and point data
``T``, ``layer`` (-1 outside), ``mask`` and ``vtkGhostType`` (2 marks
points outside the domain, which viewers hide).

Trace CSV: ``t,probe_1,...,probe_k``, one row per accepted step.  The
resampled companion has ``period,sample,phase,probe_1,...``.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import Grid

_FMT = "%.17g"
VTK_HIDDEN_POINT = 2


def header_line(config_hash: str | None) -> str:
    return f"adiheat {__version__} config_sha256={config_hash or 'none'}"


def _g(x: float) -> str:
    return _FMT % x


def write_snapshot(field: np.ndarray, grid: Grid, path, format: str = "csv",
                   config_hash: str | None = None) -> Path:
    path = Path(path)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    if format == "csv":
        _write_csv_snapshot(field, grid, path, config_hash)
    elif format == "vtk":
        _write_vtk_snapshot(field, grid, path, config_hash)
    else:
        raise ValueError(f"unknown snapshot format {format!r}")
    return path


def _write_csv_snapshot(field, grid, path, config_hash):
    jj, ii = np.nonzero(grid.mask)
    with open(path, "w") as fh:
        fh.write(f"# {header_line(config_hash)}\n")
        fh.write("r,z,layer,T\n")
        r = grid.r_centers[ii]
        z = grid.z_centers[jj]
        lay = grid.layer_of[jj, ii]
        T = field[jj, ii]
        fh.writelines(f"{_g(a)},{_g(b)},{int(m)},{_g(c)}\n" for a, b, m, c in zip(r, z, lay, T))


def _write_vtk_snapshot(field, grid, path, config_hash):
    nz, nr = grid.shape
    rr, zz = np.meshgrid(grid.r_centers, grid.z_centers)
    mask = grid.mask.ravel()
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(header_line(config_hash) + "\n")
        fh.write("ASCII\nDATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {nr} {nz} 1\n")
        fh.write(f"POINTS {nr * nz} double\n")
        fh.writelines(f"{_g(a)} {_g(b)} 0\n" for a, b in zip(rr.ravel(), zz.ravel()))
        fh.write(f"POINT_DATA {nr * nz}\n")
        fh.write("SCALARS T double 1\nLOOKUP_TABLE default\n")
        T = np.where(mask, field.ravel(), 0.0)
        fh.writelines(f"{_g(v)}\n" for v in T)
        for name, vals in (("layer", grid.layer_of.ravel()), ("mask", mask.astype(int))):
            fh.write(f"SCALARS {name} int 1\nLOOKUP_TABLE default\n")
            fh.writelines(f"{int(v)}\n" for v in vals)
        fh.write("SCALARS vtkGhostType unsigned_char 1\nLOOKUP_TABLE default\n")
        fh.writelines(f"{0 if m else VTK_HIDDEN_POINT}\n" for m in mask)


def read_snapshot_csv(path, grid: Grid) -> np.ndarray:
    """Field from a CSV snapshot; cells outside the domain are NaN."""
    out = np.full(grid.shape, np.nan)
    rows = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    jj, ii = np.nonzero(grid.mask)
    if rows.shape[0] != ii.size:
        raise ValueError(f"{path}: {rows.shape[0]} rows for {ii.size} cells")
    if not (np.array_equal(rows[:, 0], grid.r_centers[ii]) and np.array_equal(rows[:, 1], grid.z_centers[jj])):
        raise ValueError(f"{path}: coordinates do not match the grid")
    out[jj, ii] = rows[:, 3]
    return out


def read_snapshot_vtk(path) -> dict:
    """Parse a snapshot written by :func:`write_snapshot`; returns dimensions, points and arrays."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    if not lines[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    out = {"header": lines[1], "arrays": {}}
    k = 2
    while k < len(lines):
        tok = lines[k].split()
        if not tok:
            k += 1
            continue
        if tok[0] == "DIMENSIONS":
            out["dimensions"] = tuple(int(x) for x in tok[1:4])
        elif tok[0] == "POINTS":
            n = int(tok[1])
            out["points"] = np.array([[float(x) for x in lines[k + 1 + p].split()] for p in range(n)])
            k += n
        elif tok[0] == "POINT_DATA":
            npts = int(tok[1])
        elif tok[0] == "SCALARS":
            name, kind = tok[1], tok[2]
            conv = float if kind in ("double", "float") else int
            vals = np.array([conv(lines[k + 2 + p]) for p in range(npts)])
            out["arrays"][name] = vals
            k += 1 + npts
        k += 1
    nx, ny, _ = out["dimensions"]
    for name, v in out["arrays"].items():
        out["arrays"][name] = v.reshape(ny, nx)
    return out


def write_trace(times, values, path, config_hash: str | None = None, probe_names=None) -> Path:
    path = Path(path)
    values = np.asarray(values, dtype=float).reshape(len(times), -1)
    names = probe_names or [f"probe_{k + 1}" for k in range(values.shape[1])]
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header_line(config_hash)}\n")
        w = csv.writer(fh)
        w.writerow(["t", *names])
        for t, row in zip(times, values):
            w.writerow([_g(t), *(_g(v) for v in row)])
    return path


def write_resampled(resampled: np.ndarray, t_per: float, path, config_hash: str | None = None) -> Path:
    """Phase-sampled trace as fed to the regime detector."""
    path = Path(path)
    n_per, spp = resampled.shape[:2] if resampled.size else (0, 0)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header_line(config_hash)}\n")
        w = csv.writer(fh)
        nprobe = resampled.shape[2] if resampled.ndim == 3 else 0
        w.writerow(["period", "sample", "phase", *(f"probe_{k + 1}" for k in range(nprobe))])
        for p in range(n_per):
            for s in range(spp):
                w.writerow([p, s, _g(t_per * s / spp), *(_g(v) for v in resampled[p, s])])
    return path


def read_trace(path) -> tuple[np.ndarray, np.ndarray]:
    rows = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return rows[:, 0], rows[:, 1:]
