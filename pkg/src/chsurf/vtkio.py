"""Legacy ASCII VTK output of mesh snapshots with point data."""

from __future__ import annotations

import numpy as np

from .errors import ChsurfError
from .mesh import SurfaceMesh


def write_vtk(path, mesh: SurfaceMesh, point_data: dict | None = None,
              title: str = "surface snapshot") -> None:
    """Write an UNSTRUCTURED_GRID file with triangle cells.

    point_data maps array names (e.g. "u", "w") to nodal vectors; the
    snapshot time is stored as dataset field data named TIME.  Numbers
    are printed with full precision so files are bit-stable.
    """
    point_data = point_data or {}
    n, t = mesh.n_nodes, mesh.n_elements
    for name, values in point_data.items():
        if np.asarray(values).shape != (n,):
            raise ChsurfError(f"point data {name!r} does not match node count")
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "FIELD FieldData 1",
        "TIME 1 1 double",
        f"{mesh.time:.16e}",
        f"POINTS {n} double",
    ]
    lines.extend(" ".join(f"{c:.16e}" for c in row) for row in mesh.nodes)
    lines.append(f"CELLS {t} {4 * t}")
    lines.extend("3 " + " ".join(str(i) for i in tri) for tri in mesh.elements)
    lines.append(f"CELL_TYPES {t}")
    lines.extend("5" for _ in range(t))
    if point_data:
        lines.append(f"POINT_DATA {n}")
        for name, values in point_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.16e}" for v in np.asarray(values, dtype=float))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Read back files produced by write_vtk.

    Returns (points, cells, point_data, time).  Only the subset of the
    legacy format emitted by this module is understood.
    """
    with open(path) as handle:
        tokens = handle.read().split("\n")
    idx = 0

    def expect(prefix):
        nonlocal idx
        while not tokens[idx].strip():
            idx += 1
        line = tokens[idx]
        if not line.startswith(prefix):
            raise ChsurfError(f"expected {prefix!r}, found {line!r}")
        idx += 1
        return line

    expect("# vtk DataFile")
    idx += 1  # title
    expect("ASCII")
    expect("DATASET UNSTRUCTURED_GRID")
    expect("FIELD")
    expect("TIME")
    time = float(tokens[idx]); idx += 1
    n = int(expect("POINTS").split()[1])
    points = np.array([[float(c) for c in tokens[idx + i].split()] for i in range(n)])
    idx += n
    t = int(expect("CELLS").split()[1])
    cells = np.array([[int(c) for c in tokens[idx + i].split()[1:]] for i in range(t)])
    idx += t
    expect("CELL_TYPES")
    idx += t
    point_data = {}
    while idx < len(tokens) and tokens[idx].strip():
        if tokens[idx].startswith("POINT_DATA"):
            idx += 1
            continue
        name = expect("SCALARS").split()[1]
        expect("LOOKUP_TABLE")
        point_data[name] = np.array([float(tokens[idx + i]) for i in range(n)])
        idx += n
    return points, cells, point_data, time
