"""File formats: legacy VTK output, the internal mesh text format, CSV.

VTK (legacy ASCII 2.0, unstructured grid) is visualization-only: fields are
written at mesh vertices (P2 edge values are dropped). CSV is the canonical
quantitative output; floats are written with repr-faithful %.17g so repeated
deterministic runs produce byte-identical files.

Mesh text format, three sections introduced by header lines:

    vertices <n> <dim>      one line per vertex: coordinates
    cells <n> <k>           one line per cell: k vertex indices, region tag
    tags                    one line: "regions SOLID=0 FLUID=1"

Boundary and interface facets are recomputed from the region tags on read.
"""

import numpy as np

from .meshing import FLUID, ReferenceMesh

VTK_CELL_TYPE = {2: 5, 3: 10}  # triangle, tetrahedron


def write_vtk(path, mesh, point_data=None, title="fsicavity fields"):
    """Legacy ASCII unstructured-grid file with vertex point data.

    point_data maps name -> array of shape (nv,) or (nv, d) at mesh vertices.
    """
    nv = len(mesh.vertices)
    nc = len(mesh.cells)
    k = mesh.cells.shape[1]
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write(f"{title}\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {nv} double\n")
        for p in mesh.vertices:
            x, y = p[0], p[1]
            z = p[2] if mesh.dim == 3 else 0.0
            f.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        f.write(f"CELLS {nc} {nc * (k + 1)}\n")
        for c in mesh.cells:
            f.write(f"{k} " + " ".join(str(int(v)) for v in c) + "\n")
        f.write(f"CELL_TYPES {nc}\n")
        ct = VTK_CELL_TYPE[mesh.dim]
        for _ in range(nc):
            f.write(f"{ct}\n")
        f.write(f"CELL_DATA {nc}\n")
        f.write("SCALARS region int\n")
        f.write("LOOKUP_TABLE default\n")
        for r in mesh.cell_region:
            f.write(f"{int(r)}\n")
        if point_data:
            f.write(f"POINT_DATA {nv}\n")
            for name, arr in point_data.items():
                arr = np.asarray(arr, dtype=float)
                if arr.ndim == 1:
                    f.write(f"SCALARS {name} double\n")
                    f.write("LOOKUP_TABLE default\n")
                    for v in arr:
                        f.write(f"{v:.17g}\n")
                else:
                    f.write(f"VECTORS {name} double\n")
                    for row in arr:
                        x, y = row[0], row[1]
                        z = row[2] if arr.shape[1] == 3 else 0.0
                        f.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def vertex_field(mesh, space, values, fill=0.0):
    """Spread a region-space nodal field to all mesh vertices (viz helper)."""
    values = np.asarray(values, dtype=float)
    shape = (len(mesh.vertices),) + values.shape[1:]
    out = np.full(shape, fill)
    for v, dof in space.vertex_dof.items():
        out[v] = values[dof]
    return out


def write_mesh_text(path, mesh):
    with open(path, "w") as f:
        f.write(f"vertices {len(mesh.vertices)} {mesh.dim}\n")
        for p in mesh.vertices:
            f.write(" ".join(f"{x:.17g}" for x in p) + "\n")
        f.write(f"cells {len(mesh.cells)} {mesh.cells.shape[1]}\n")
        for c, r in zip(mesh.cells, mesh.cell_region):
            f.write(" ".join(str(int(v)) for v in c) + f" {int(r)}\n")
        f.write("tags\n")
        f.write("regions SOLID=0 FLUID=1\n")


def read_mesh_text(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    i = 0
    head = lines[i].split()
    if head[0] != "vertices":
        raise ValueError("expected 'vertices' section")
    nv, dim = int(head[1]), int(head[2])
    i += 1
    verts = np.array([[float(x) for x in lines[i + j].split()] for j in range(nv)])
    i += nv
    head = lines[i].split()
    if head[0] != "cells":
        raise ValueError("expected 'cells' section")
    nc, k = int(head[1]), int(head[2])
    i += 1
    rows = [[int(x) for x in lines[i + j].split()] for j in range(nc)]
    cells = np.array([r[:k] for r in rows], dtype=np.int64)
    region = np.array([r[k] for r in rows], dtype=np.int8)
    return ReferenceMesh(verts, cells, region)


def write_csv(path, header, rows):
    """CSV with %.17g floats; deterministic byte output for identical rows."""
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            out = []
            for key in header:
                v = row[key] if isinstance(row, dict) else row[header.index(key)]
                if isinstance(v, (float, np.floating)):
                    out.append(f"{float(v):.17g}")
                else:
                    out.append(str(v))
            f.write(",".join(out) + "\n")


def read_csv(path):
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = []
        for line in f:
            parts = line.strip().split(",")
            row = {}
            for k, v in zip(header, parts):
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    return header, rows
