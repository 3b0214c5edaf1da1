"""Legacy ASCII VTK export of meshes and fields (DataFile Version 2.0)."""

from __future__ import annotations

import numpy as np

_CELL_TYPE = {3: 5, 4: 10}  # triangle, tetrahedron


def write_vtk(path, points, cells, point_data=None, cell_data=None, title="femmin"):
    """Write an unstructured grid; 2D points are padded with z = 0."""
    points = np.asarray(points, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    if points.shape[1] == 2:
        points = np.column_stack([points, np.zeros(points.shape[0])])
    nv = cells.shape[1]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {points.shape[0]} double\n")
        for p in points:
            fh.write(
                f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n"
            )
        fh.write(f"CELLS {cells.shape[0]} {cells.shape[0] * (nv + 1)}\n")
        for row in cells:
            fh.write(str(nv) + " " + " ".join(str(i) for i in row) + "\n")
        fh.write(f"CELL_TYPES {cells.shape[0]}\n")
        for _ in range(cells.shape[0]):
            fh.write(f"{_CELL_TYPE[nv]}\n")
        if point_data:
            fh.write(f"POINT_DATA {points.shape[0]}\n")
            for name, values in point_data.items():
                _write_scalars(fh, name, values)
        if cell_data:
            fh.write(f"CELL_DATA {cells.shape[0]}\n")
            for name, values in cell_data.items():
                _write_scalars(fh, name, values)


def _write_scalars(fh, name, values):
    values = np.asarray(values, dtype=float)
    fh.write(f"SCALARS {name} double 1\n")
    fh.write("LOOKUP_TABLE default\n")
    for v in values:
        fh.write(f"{float(v)!r}\n")


def read_vtk(path):
    """Minimal reader for files produced by :func:`write_vtk`.

    Returns (points, cells, point_data, cell_data).
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    i = 0

    def advance_to(prefix):
        nonlocal i
        while not lines[i].startswith(prefix):
            i += 1

    advance_to("POINTS")
    npts = int(lines[i].split()[1])
    points = np.array(
        [[float(t) for t in lines[i + 1 + k].split()] for k in range(npts)]
    )
    i += 1 + npts
    advance_to("CELLS")
    ncells = int(lines[i].split()[1])
    cells = np.array(
        [[int(t) for t in lines[i + 1 + k].split()[1:]] for k in range(ncells)],
        dtype=np.int64,
    )
    i += 1 + ncells

    point_data: dict[str, np.ndarray] = {}
    cell_data: dict[str, np.ndarray] = {}
    target, count = None, 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("POINT_DATA"):
            target, count = point_data, npts
        elif ln.startswith("CELL_DATA"):
            target, count = cell_data, ncells
        elif ln.startswith("SCALARS") and target is not None:
            name = ln.split()[1]
            values = np.array(
                [float(lines[i + 2 + k]) for k in range(count)]
            )
            target[name] = values
            i += 1 + count
        i += 1
    return points, cells, point_data, cell_data
