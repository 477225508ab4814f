"""Reference-configuration meshes: fluid cavity inside an elastic shell.

Two built-in geometry families, both with the fluid region strictly interior:

* ``disk-annulus`` (d=2): fluid disk of radius r_inner inside an elastic
  annulus r_inner..r_outer, meshed with concentric rings of triangles.
* ``spherical-shell`` (d=3): fluid ball inside a spherical shell, meshed by
  radial extrusion of a subdivided icosahedron into tetrahedra.

Cells carry a region tag (SOLID / FLUID); boundary facets carry GAMMA_B (outer
solid boundary) and interface facets GAMMA_L (solid-fluid interface). The unit
normal convention is outward-from-fluid on GAMMA_L and outward-from-solid on
GAMMA_B. Curved boundaries are approximated polygonally.
"""

from dataclasses import dataclass

import numpy as np

SOLID = 0
FLUID = 1

GAMMA_B = 0
GAMMA_L = 1


@dataclass(frozen=True)
class GeometrySpec:
    """Built-in geometry family with target mesh size h."""

    family: str = "disk-annulus"
    r_inner: float = 1.0
    r_outer: float = 2.0
    h: float = 0.25

    def __post_init__(self):
        if self.family not in ("disk-annulus", "spherical-shell"):
            raise ValueError(f"unknown geometry family {self.family!r}")
        if not self.r_inner > 0.0:
            raise ValueError("r_inner must be positive")
        if not self.r_outer > self.r_inner:
            raise ValueError("r_outer must exceed r_inner")
        if not self.h > 0.0:
            raise ValueError("h must be positive")


class ReferenceMesh:
    """Conforming simplicial mesh with region and boundary tags.

    vertices    : (nv, d) coordinates
    cells       : (nc, d+1) vertex indices, positively oriented
    cell_region : (nc,) SOLID or FLUID
    facets_B    : (nB, d) vertex indices of GAMMA_B facets
    facets_L    : (nL, d) vertex indices of GAMMA_L facets
    facet_B_cell: (nB,) adjacent (solid) cell index
    facet_L_solid, facet_L_fluid : (nL,) adjacent cell on each side
    """

    def __init__(self, vertices, cells, cell_region, geometry=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = np.asarray(cells, dtype=np.int64)
        self.cell_region = np.asarray(cell_region, dtype=np.int8)
        self.geometry = geometry
        self.dim = self.vertices.shape[1]
        _fix_orientation(self.vertices, self.cells)
        self._classify_facets()

    # -- construction helpers -------------------------------------------------

    def _classify_facets(self):
        d = self.dim
        nc = len(self.cells)
        # local facets of a simplex: all (d)-subsets opposite each vertex
        local = [tuple(j for j in range(d + 1) if j != i) for i in range(d + 1)]
        facet_map = {}
        for c in range(nc):
            for loc in local:
                key = tuple(sorted(self.cells[c, list(loc)]))
                facet_map.setdefault(key, []).append(c)

        fB, fB_cell = [], []
        fL, fL_solid, fL_fluid = [], [], []
        for key, owners in facet_map.items():
            if len(owners) == 1:
                c = owners[0]
                if self.cell_region[c] != SOLID:
                    raise ValueError("outer boundary facet owned by a fluid cell")
                fB.append(key)
                fB_cell.append(c)
            elif len(owners) == 2:
                r0, r1 = self.cell_region[owners[0]], self.cell_region[owners[1]]
                if r0 != r1:
                    fL.append(key)
                    if r0 == SOLID:
                        fL_solid.append(owners[0])
                        fL_fluid.append(owners[1])
                    else:
                        fL_solid.append(owners[1])
                        fL_fluid.append(owners[0])
            else:
                raise ValueError("non-conforming mesh: facet shared by >2 cells")

        order_B = np.lexsort(np.array(fB, dtype=np.int64).T) if fB else []
        order_L = np.lexsort(np.array(fL, dtype=np.int64).T) if fL else []
        self.facets_B = np.array(fB, dtype=np.int64)[order_B] if fB else np.empty((0, d), np.int64)
        self.facet_B_cell = np.array(fB_cell, dtype=np.int64)[order_B] if fB else np.empty(0, np.int64)
        self.facets_L = np.array(fL, dtype=np.int64)[order_L] if fL else np.empty((0, d), np.int64)
        self.facet_L_solid = np.array(fL_solid, dtype=np.int64)[order_L] if fL else np.empty(0, np.int64)
        self.facet_L_fluid = np.array(fL_fluid, dtype=np.int64)[order_L] if fL else np.empty(0, np.int64)

    # -- queries ---------------------------------------------------------------

    def region_cells(self, region):
        return np.flatnonzero(self.cell_region == region)

    def cell_measures(self):
        d = self.dim
        v0 = self.vertices[self.cells[:, 0]]
        edges = self.vertices[self.cells[:, 1:]] - v0[:, None, :]
        dets = np.linalg.det(edges)
        return dets / (2.0 if d == 2 else 6.0)

    def region_measure(self, region):
        return float(self.cell_measures()[self.cell_region == region].sum())

    def facet_normal(self, facet_vertices, away_from_cell):
        """Unit normal of a facet pointing away from the given cell."""
        pts = self.vertices[np.asarray(facet_vertices)]
        if self.dim == 2:
            t = pts[1] - pts[0]
            n = np.array([t[1], -t[0]])
        else:
            n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        n = n / np.linalg.norm(n)
        centroid_cell = self.vertices[self.cells[away_from_cell]].mean(axis=0)
        centroid_facet = pts.mean(axis=0)
        if np.dot(n, centroid_facet - centroid_cell) < 0.0:
            n = -n
        return n

    def facet_normals(self, tag):
        """Unit normals per facet: out of FLUID on GAMMA_L, out of SOLID on GAMMA_B."""
        if tag == GAMMA_L:
            facets, owners = self.facets_L, self.facet_L_fluid
        else:
            facets, owners = self.facets_B, self.facet_B_cell
        return np.array(
            [self.facet_normal(f, c) for f, c in zip(facets, owners)]
        ).reshape(len(facets), self.dim)


def _fix_orientation(vertices, cells):
    d = vertices.shape[1]
    v0 = vertices[cells[:, 0]]
    edges = vertices[cells[:, 1:]] - v0[:, None, :]
    bad = np.linalg.det(edges) < 0.0
    cells[bad, 1], cells[bad, 2] = cells[bad, 2].copy(), cells[bad, 1].copy()


def build_reference_mesh(geometry):
    """Build the tagged mesh for a GeometrySpec."""
    if geometry.family == "disk-annulus":
        return _build_disk_annulus(geometry)
    return _build_ball_shell(geometry)


# -- 2D disk/annulus ------------------------------------------------------------


def _ring_angles(m):
    return 2.0 * np.pi * np.arange(m) / m


def _band_triangles(idx_in, ang_in, idx_out, ang_out):
    """Triangulate the band between two concentric vertex rings.

    Advancing-front sweep over the two angle sequences; produces
    len(idx_in) + len(idx_out) triangles and conforms to both rings.
    """
    mA, mB = len(idx_in), len(idx_out)
    tris = []
    i = j = 0
    while i < mA or j < mB:
        a_next = ang_in[(i + 1) % mA] + (2.0 * np.pi if i + 1 >= mA else 0.0)
        b_next = ang_out[(j + 1) % mB] + (2.0 * np.pi if j + 1 >= mB else 0.0)
        if i < mA and (j >= mB or a_next <= b_next):
            tris.append((idx_in[i % mA], idx_out[j % mB], idx_in[(i + 1) % mA]))
            i += 1
        else:
            tris.append((idx_in[i % mA], idx_out[j % mB], idx_out[(j + 1) % mB]))
            j += 1
    return tris


def _build_disk_annulus(geom):
    r1, r2, h = geom.r_inner, geom.r_outer, geom.h
    n_fluid = max(2, int(round(r1 / h)))
    n_solid = max(2, int(round((r2 - r1) / h)))
    radii = np.concatenate(
        [
            r1 * np.arange(1, n_fluid + 1) / n_fluid,
            r1 + (r2 - r1) * np.arange(1, n_solid + 1) / n_solid,
        ]
    )
    interface_ring = n_fluid - 1  # index into the ring list below

    vertices = [np.zeros(2)]
    rings = []  # (vertex ids, angles)
    for r in radii:
        m = max(8, int(round(2.0 * np.pi * r / h)))
        ang = _ring_angles(m)
        ids = np.arange(len(vertices), len(vertices) + m)
        vertices.extend(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        rings.append((ids, ang))

    cells, region = [], []
    ids0, _ = rings[0]
    for j in range(len(ids0)):
        cells.append((0, ids0[j], ids0[(j + 1) % len(ids0)]))
        region.append(FLUID)
    for k in range(len(rings) - 1):
        (ids_in, ang_in), (ids_out, ang_out) = rings[k], rings[k + 1]
        tris = _band_triangles(ids_in, ang_in, ids_out, ang_out)
        cells.extend(tris)
        region.extend([FLUID if k < interface_ring else SOLID] * len(tris))

    return ReferenceMesh(np.array(vertices), np.array(cells), np.array(region), geom)


# -- 3D ball/shell ----------------------------------------------------------------


def _icosphere(subdivisions):
    """Unit-sphere triangulation from a subdivided icosahedron."""
    phi = (1.0 + 5.0**0.5) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        verts_list = list(verts)
        midpoint = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                p = verts_list[a] + verts_list[b]
                p = p / np.linalg.norm(p)
                midpoint[key] = len(verts_list)
                verts_list.append(p)
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        verts = np.array(verts_list)
        faces = np.array(new_faces, dtype=np.int64)
    return verts, faces


def _split_prism(bottom, top):
    """Split a prism into 3 tets, diagonals chosen by smallest global index.

    Neighbouring prisms in a layer share quad faces; the index rule picks the
    same diagonal on both sides, so the split is conforming.
    """
    prism = list(bottom) + list(top)
    # rotate so the smallest vertex of the bottom triangle is first; the
    # radial pairing (bottom[i] below top[i]) must be preserved
    k = int(np.argmin(bottom))
    b = [prism[k], prism[(k + 1) % 3], prism[(k + 2) % 3]]
    t = [prism[3 + k], prism[3 + (k + 1) % 3], prism[3 + (k + 2) % 3]]
    v0, v1, v2, v3, v4, v5 = b[0], b[1], b[2], t[0], t[1], t[2]
    if min(v1, v5) < min(v2, v4):
        return [(v0, v1, v2, v5), (v0, v1, v5, v4), (v0, v4, v5, v3)]
    return [(v0, v1, v2, v4), (v0, v4, v2, v5), (v0, v4, v5, v3)]


def _build_ball_shell(geom):
    r1, r2, h = geom.r_inner, geom.r_outer, geom.h
    subdivisions = max(0, int(np.ceil(np.log2(max(1e-12, 1.05 * r1 / h)))))
    sphere_v, sphere_f = _icosphere(subdivisions)
    nsv = len(sphere_v)

    n_fluid = max(2, int(round(r1 / h)))
    n_solid = max(2, int(round((r2 - r1) / h)))
    radii = np.concatenate(
        [
            r1 * np.arange(1, n_fluid + 1) / n_fluid,
            r1 + (r2 - r1) * np.arange(1, n_solid + 1) / n_solid,
        ]
    )
    interface_layer = n_fluid - 1

    vertices = [np.zeros(3)]
    layer_ids = []
    for r in radii:
        ids = np.arange(len(vertices), len(vertices) + nsv)
        vertices.extend(r * sphere_v)
        layer_ids.append(ids)
    vertices = np.array(vertices)

    cells, region = [], []
    ids0 = layer_ids[0]
    for a, b, c in sphere_f:
        cells.append((0, ids0[a], ids0[b], ids0[c]))
        region.append(FLUID)
    for k in range(len(radii) - 1):
        lo, hi = layer_ids[k], layer_ids[k + 1]
        reg = FLUID if k < interface_layer else SOLID
        for a, b, c in sphere_f:
            for tet in _split_prism((lo[a], lo[b], lo[c]), (hi[a], hi[b], hi[c])):
                cells.append(tet)
                region.append(reg)

    return ReferenceMesh(vertices, np.array(cells, dtype=np.int64), np.array(region), geom)
