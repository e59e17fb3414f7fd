"""Legacy VTK ASCII writers (unstructured grid).

The volume mesh is written with hexahedral cells; a companion file holds
the boundary facets as quads with the Dirichlet/Neumann tag as cell data.
Solution states export vertex-sampled point data (velocity vector,
pressure and temperature scalars).  Floats are written with 17
significant digits so repeated runs are byte-identical.
"""

import numpy as np

__all__ = ["write_mesh_vtk", "write_boundary_vtk", "write_state_vtk"]

_HEADER = "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n"


def _fmt(x):
    return f"{x:.17g}"


def _write_points(f, pts):
    f.write(f"POINTS {len(pts)} double\n")
    for p in pts:
        f.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")


def write_mesh_vtk(mesh, path, title="channel mesh"):
    """Volume mesh with hexahedral cells (VTK cell type 12)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(_HEADER.format(title=title))
        _write_points(f, mesh.vertices)
        nc = mesh.n_cells
        f.write(f"CELLS {nc} {9 * nc}\n")
        for cell in mesh.cells:
            f.write("8 " + " ".join(str(v) for v in cell) + "\n")
        f.write(f"CELL_TYPES {nc}\n")
        f.write("\n".join(["12"] * nc) + "\n")


def write_boundary_vtk(mesh, path, title="channel boundary facets"):
    """Boundary facets as quads (type 9) with tags as integer cell data."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(_HEADER.format(title=title))
        _write_points(f, mesh.vertices)
        nf = len(mesh.facets)
        f.write(f"CELLS {nf} {5 * nf}\n")
        for quad in mesh.facets:
            f.write("4 " + " ".join(str(v) for v in quad) + "\n")
        f.write(f"CELL_TYPES {nf}\n")
        f.write("\n".join(["9"] * nf) + "\n")
        f.write(f"CELL_DATA {nf}\n")
        f.write("SCALARS facet_tag int 1\nLOOKUP_TABLE default\n")
        f.write("\n".join(str(int(t)) for t in mesh.facet_tags) + "\n")
        f.write("SCALARS face_id int 1\nLOOKUP_TABLE default\n")
        f.write("\n".join(str(int(t)) for t in mesh.facet_faces) + "\n")


def write_state_vtk(space, state, path, title="solution"):
    """Vertex-sampled solution: velocity vector, pressure, temperature."""
    mesh = space.mesh
    vmap = space.vertex_to_q2
    u = space.split_velocity(state.u)[vmap]         # (nv, 3)
    theta = state.theta[vmap]
    P = np.asarray(state.P)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_HEADER.format(title=title))
        _write_points(f, mesh.vertices)
        nc = mesh.n_cells
        f.write(f"CELLS {nc} {9 * nc}\n")
        for cell in mesh.cells:
            f.write("8 " + " ".join(str(v) for v in cell) + "\n")
        f.write(f"CELL_TYPES {nc}\n")
        f.write("\n".join(["12"] * nc) + "\n")
        f.write(f"POINT_DATA {mesh.n_vertices}\n")
        f.write("VECTORS velocity double\n")
        for row in u:
            f.write(f"{_fmt(row[0])} {_fmt(row[1])} {_fmt(row[2])}\n")
        f.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        f.write("\n".join(_fmt(v) for v in P) + "\n")
        f.write("SCALARS temperature double 1\nLOOKUP_TABLE default\n")
        f.write("\n".join(_fmt(v) for v in theta) + "\n")
