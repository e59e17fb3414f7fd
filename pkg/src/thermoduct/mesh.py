"""Structured hexahedral box-channel mesh with tagged boundary.

The channel occupies the box [0, Lx] x [0, Ly] x [0, Lz].  The two faces
normal to the x axis are the open ends (tag ``GAMMA_N``, natural/do-nothing
boundary); the four lateral walls are no-slip/fixed-temperature walls
(tag ``GAMMA_D``).  The junction edges, where the boundary condition
changes type, meet at a dihedral angle of pi/2 and are collected in
``edges_M``.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "FacetTag",
    "ChannelMesh",
    "build_channel_mesh",
    "junction_angle",
    "facet_areas",
]

FACE_NAMES = ("x0", "x1", "y0", "y1", "z0", "z1")


class FacetTag(IntEnum):
    GAMMA_D = 1
    GAMMA_N = 2


@dataclass
class ChannelMesh:
    """Axis-aligned hexahedral mesh of the box channel.

    Vertices are ordered x fastest, then y, then z.  ``facets`` holds the
    boundary quads (4 vertex ids each), one tag per facet.  ``edges_M`` is
    the set of mesh edges shared by exactly one GAMMA_D facet and one
    GAMMA_N facet; ``edge_facets`` stores that (D-facet, N-facet) pair per
    junction edge.  Instances are immutable after construction.
    """

    dims: tuple
    divisions: tuple
    vertices: np.ndarray        # (nv, 3)
    cells: np.ndarray           # (nc, 8) hex connectivity, VTK ordering
    facets: np.ndarray          # (nf, 4)
    facet_tags: np.ndarray      # (nf,)
    facet_faces: np.ndarray     # (nf,) index into FACE_NAMES
    edges_M: np.ndarray         # (ne, 2) sorted vertex pairs
    edge_facets: np.ndarray     # (ne, 2) facet index of (GAMMA_D, GAMMA_N) side

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def spacing(self):
        L = np.asarray(self.dims, dtype=float)
        return L / np.asarray(self.divisions, dtype=float)


def build_channel_mesh(Lx, Ly, Lz, nx, ny, nz):
    """Build the box-channel mesh with divisions (nx, ny, nz).

    Raises ValueError for non-positive lengths or counts.  Vertex ids run
    x fastest, then y, then z; cell (i, j, k) has id i + nx*(j + ny*k).
    """
    dims = (float(Lx), float(Ly), float(Lz))
    divisions = (int(nx), int(ny), int(nz))
    if any(L <= 0 for L in dims):
        raise ValueError(f"channel dimensions must be positive, got {dims}")
    if any(n < 1 for n in divisions) or (nx, ny, nz) != divisions:
        raise ValueError(f"divisions must be integers >= 1, got {(nx, ny, nz)}")
    nx, ny, nz = divisions

    h = np.array(dims) / np.array(divisions)
    # arange * h keeps coarse vertices bit-identical under division doubling
    xs = np.arange(nx + 1) * h[0]
    ys = np.arange(ny + 1) * h[1]
    zs = np.arange(nz + 1) * h[2]
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    vertices = np.stack(
        [X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")], axis=1
    )

    px, py = nx + 1, ny + 1

    def vid(i, j, k):
        return i + px * (j + py * k)

    ci, cj, ck = np.meshgrid(
        np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
    )
    ci = ci.ravel(order="F")
    cj = cj.ravel(order="F")
    ck = ck.ravel(order="F")
    cells = np.stack(
        [
            vid(ci, cj, ck),
            vid(ci + 1, cj, ck),
            vid(ci + 1, cj + 1, ck),
            vid(ci, cj + 1, ck),
            vid(ci, cj, ck + 1),
            vid(ci + 1, cj, ck + 1),
            vid(ci + 1, cj + 1, ck + 1),
            vid(ci, cj + 1, ck + 1),
        ],
        axis=1,
    )

    facets = []
    tags = []
    faces = []

    def add_face(face, quads, tag):
        facets.extend(quads)
        tags.extend([tag] * len(quads))
        faces.extend([FACE_NAMES.index(face)] * len(quads))

    # open ends, x = 0 and x = Lx
    for face, i in (("x0", 0), ("x1", nx)):
        quads = [
            [vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]
            for k in range(nz)
            for j in range(ny)
        ]
        add_face(face, quads, FacetTag.GAMMA_N)
    # lateral walls
    for face, j in (("y0", 0), ("y1", ny)):
        quads = [
            [vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j, k + 1), vid(i, j, k + 1)]
            for k in range(nz)
            for i in range(nx)
        ]
        add_face(face, quads, FacetTag.GAMMA_D)
    for face, k in (("z0", 0), ("z1", nz)):
        quads = [
            [vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]
            for j in range(ny)
            for i in range(nx)
        ]
        add_face(face, quads, FacetTag.GAMMA_D)

    facets = np.asarray(facets, dtype=np.int64)
    facet_tags = np.asarray(tags, dtype=np.int64)
    facet_faces = np.asarray(faces, dtype=np.int64)

    edges_M, edge_facets = _junction_edges(facets, facet_tags)
    return ChannelMesh(
        dims=dims,
        divisions=divisions,
        vertices=vertices,
        cells=cells,
        facets=facets,
        facet_tags=facet_tags,
        facet_faces=facet_faces,
        edges_M=edges_M,
        edge_facets=edge_facets,
    )


def _junction_edges(facets, facet_tags):
    """Edges shared by exactly one GAMMA_D facet and one GAMMA_N facet."""
    edge_owner = {}
    for f, quad in enumerate(facets):
        for a in range(4):
            v0, v1 = quad[a], quad[(a + 1) % 4]
            key = (min(v0, v1), max(v0, v1))
            edge_owner.setdefault(key, []).append(f)
    edges = []
    pairs = []
    for key in sorted(edge_owner):
        owners = edge_owner[key]
        if len(owners) != 2:
            continue
        t0, t1 = facet_tags[owners[0]], facet_tags[owners[1]]
        if {int(t0), int(t1)} == {int(FacetTag.GAMMA_D), int(FacetTag.GAMMA_N)}:
            edges.append(key)
            if t0 == FacetTag.GAMMA_D:
                pairs.append((owners[0], owners[1]))
            else:
                pairs.append((owners[1], owners[0]))
    return (
        np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
    )


def facet_areas(mesh):
    """Area of each boundary facet, from vertex coordinates (shoelace)."""
    quads = mesh.vertices[mesh.facets]             # (nf, 4, 3)
    d1 = quads[:, 2] - quads[:, 0]
    d2 = quads[:, 3] - quads[:, 1]
    return 0.5 * np.linalg.norm(np.cross(d1, d2), axis=1)


def junction_angle(mesh, edge):
    """Dihedral angle between the two facets adjacent to a junction edge.

    ``edge`` is either an index into ``mesh.edges_M`` or a vertex-id pair.
    Rejects edges that are not on the boundary-condition junction.
    """
    if isinstance(edge, (int, np.integer)):
        idx = int(edge)
        if not 0 <= idx < len(mesh.edges_M):
            raise ValueError(f"junction edge index {idx} out of range")
    else:
        v0, v1 = int(edge[0]), int(edge[1])
        key = (min(v0, v1), max(v0, v1))
        hit = np.nonzero(
            (mesh.edges_M[:, 0] == key[0]) & (mesh.edges_M[:, 1] == key[1])
        )[0]
        if len(hit) == 0:
            raise ValueError(f"edge {key} is not on the Dirichlet/Neumann junction")
        idx = int(hit[0])

    v0, v1 = mesh.edges_M[idx]
    p0, p1 = mesh.vertices[v0], mesh.vertices[v1]
    mid = 0.5 * (p0 + p1)
    t = p1 - p0
    t = t / np.linalg.norm(t)
    arms = []
    for facet in mesh.edge_facets[idx]:
        centroid = mesh.vertices[mesh.facets[facet]].mean(axis=0)
        w = centroid - mid
        w = w - (w @ t) * t
        arms.append(w / np.linalg.norm(w))
    return float(np.arccos(np.clip(arms[0] @ arms[1], -1.0, 1.0)))
