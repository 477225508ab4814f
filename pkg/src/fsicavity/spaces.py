"""Continuous piecewise-polynomial spaces on tagged simplicial meshes.

P1 and P2 spaces per region (solid displacement and fluid velocity are P2,
fluid pressure is P1: an inf-sup stable mixed pair), plus boundary spaces on
tagged facet sets whose dofs coincide with the traces of the volume spaces.

Quadrature is the conical-product Gauss rule on the simplex (all weights
positive, nodes from Gauss-Jacobi roots), exact for total degree <= 2n-1.
"""

import numpy as np
from scipy.special import roots_jacobi

from .meshing import GAMMA_B, GAMMA_L


def simplex_quadrature(dim, npts=3):
    """Conical-product rule on the unit simplex; exact for degree <= 2*npts-1.

    Returns (points, weights) with points (nq, dim) in simplex coordinates
    and weights summing to the simplex volume 1/dim!.
    """
    axes = []
    for k in range(dim):
        alpha = dim - 1 - k
        x, w = roots_jacobi(npts, alpha, 0.0)
        t = 0.5 * (x + 1.0)
        w = w * 0.5 ** (alpha + 1)
        axes.append((t, w))
    pts, wts = [], []
    for idx in np.ndindex(*(npts,) * dim):
        t = [axes[k][0][idx[k]] for k in range(dim)]
        w = np.prod([axes[k][1][idx[k]] for k in range(dim)])
        x = np.empty(dim)
        scale = 1.0
        for k in range(dim):
            x[k] = t[k] * scale
            scale *= 1.0 - t[k]
        pts.append(x)
        wts.append(w)
    return np.array(pts), np.array(wts)


def _edge_list(dim):
    return [(i, j) for i in range(dim + 1) for j in range(i + 1, dim + 1)]


def _barycentric(points):
    """Simplex coordinates (nq, d) -> barycentric (nq, d+1)."""
    lam0 = 1.0 - points.sum(axis=1)
    return np.column_stack([lam0, points])


def _grad_lambda(dim):
    """Gradients of barycentric coordinates w.r.t. simplex coordinates."""
    g = np.vstack([-np.ones(dim), np.eye(dim)])
    return g  # (d+1, d)


def basis_tables(dim, degree, points):
    """Values and reference gradients of the nodal basis at given points.

    Node order: vertices 0..d, then edge midpoints in _edge_list order.
    Returns (phi (nq, nl), grad (nq, nl, d)).
    """
    lam = _barycentric(points)
    glam = _grad_lambda(dim)
    nq = len(points)
    if degree == 1:
        phi = lam.copy()
        grad = np.broadcast_to(glam, (nq, dim + 1, dim)).copy()
        return phi, grad
    if degree != 2:
        raise ValueError("only degrees 1 and 2 are supported")
    edges = _edge_list(dim)
    nl = (dim + 1) + len(edges)
    phi = np.empty((nq, nl))
    grad = np.empty((nq, nl, dim))
    for i in range(dim + 1):
        phi[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grad[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * glam[i]
    for e, (i, j) in enumerate(edges):
        k = dim + 1 + e
        phi[:, k] = 4.0 * lam[:, i] * lam[:, j]
        grad[:, k, :] = 4.0 * (lam[:, i][:, None] * glam[j] + lam[:, j][:, None] * glam[i])
    return phi, grad


def basis_hessians(dim, degree):
    """Constant reference Hessians of the basis (nl, d, d); zero for P1."""
    glam = _grad_lambda(dim)
    if degree == 1:
        return np.zeros((dim + 1, dim, dim))
    edges = _edge_list(dim)
    nl = (dim + 1) + len(edges)
    H = np.zeros((nl, dim, dim))
    for i in range(dim + 1):
        H[i] = 4.0 * np.outer(glam[i], glam[i])
    for e, (i, j) in enumerate(edges):
        H[dim + 1 + e] = 4.0 * (np.outer(glam[i], glam[j]) + np.outer(glam[j], glam[i]))
    return H


class FunctionSpace:
    """Nodal scalar space of degree 1 or 2 on one region of the mesh.

    Vector fields use the same dof layout with node-major, component-minor
    flattening (dof = node*d + component).
    """

    def __init__(self, mesh, region, degree, quad_points=3):
        self.mesh = mesh
        self.region = region
        self.degree = degree
        self.dim = d = mesh.dim

        self.cell_ids = mesh.region_cells(region)
        cells = mesh.cells[self.cell_ids]  # (ncr, d+1) global vertex ids
        self.cells = cells
        self.ncells = len(cells)

        vused = np.unique(cells)
        self.vertex_dof = {int(v): i for i, v in enumerate(vused)}
        coords = [mesh.vertices[vused]]
        cell_dofs = np.empty((self.ncells, 0), dtype=np.int64)
        vdofs = np.vectorize(self.vertex_dof.__getitem__)(cells)
        cell_dofs = vdofs

        self.edge_dof = {}
        if degree == 2:
            edges = _edge_list(d)
            ecols = []
            next_dof = len(vused)
            mids = []
            for (i, j) in edges:
                pairs = np.sort(cells[:, [i, j]], axis=1)
                col = np.empty(self.ncells, dtype=np.int64)
                for c, (a, b) in enumerate(pairs):
                    key = (int(a), int(b))
                    dof = self.edge_dof.get(key)
                    if dof is None:
                        dof = next_dof
                        self.edge_dof[key] = dof
                        mids.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
                        next_dof += 1
                    col[c] = dof
                ecols.append(col)
            cell_dofs = np.column_stack([vdofs] + ecols)
            if mids:
                coords.append(np.array(mids))
        self.cell_dofs = cell_dofs
        self.dof_coords = np.vstack(coords)
        self.ndof = len(self.dof_coords)
        self.nlocal = cell_dofs.shape[1]

        # geometry tables
        verts = mesh.vertices[cells]
        A = np.swapaxes(verts[:, 1:, :] - verts[:, :1, :], 1, 2)  # (ncr, d, d)
        self.detA = np.linalg.det(A)
        self.A_invT = np.swapaxes(np.linalg.inv(A), 1, 2)
        self.cell_measure = np.abs(self.detA) / np.prod(range(1, d + 1))

        # quadrature tables
        self.qp_ref, self.qw_ref = simplex_quadrature(d, quad_points)
        self.nq = len(self.qw_ref)
        self.phi, grad_ref = basis_tables(d, degree, self.qp_ref)
        # physical gradients: (ncr, nq, nl, d)
        self.grad_phi = np.einsum("qli,cji->cqlj", grad_ref, self.A_invT)
        # physical quadrature weights: (ncr, nq)
        self.qweights = np.abs(self.detA)[:, None] * self.qw_ref[None, :]
        # physical quadrature points: (ncr, nq, d)
        lam = _barycentric(self.qp_ref)
        self.qpoints = np.einsum("ql,cli->cqi", lam, verts)
        # constant per-cell basis Hessians: (ncr, nl, d, d)
        H_ref = basis_hessians(d, degree)
        self.hess_phi = np.einsum("cai,lij,cbj->clab", self.A_invT, H_ref, self.A_invT)

    # -- vector dof helpers ---------------------------------------------------

    @property
    def ndof_vec(self):
        return self.ndof * self.dim

    def vector_cell_dofs(self):
        """(ncr, nl*d) flattened vector dofs, node-major component-minor."""
        d = self.dim
        return (self.cell_dofs[:, :, None] * d + np.arange(d)).reshape(self.ncells, -1)

    def node_dof(self, vertex_id):
        return self.vertex_dof[int(vertex_id)]


class BoundarySpace:
    """Trace space on a tagged facet set, one-sided toward a given region.

    Dofs are the facet vertices (and facet-edge midpoints for P2), numbered
    locally; volume_dof_map(space) gives their dof ids in an adjacent volume
    space so traces are pure index extractions.
    """

    def __init__(self, mesh, tag, degree=2, side=None, quad_points=3):
        self.mesh = mesh
        self.tag = tag
        self.degree = degree
        self.dim = d = mesh.dim

        if tag == GAMMA_B:
            self.facets = mesh.facets_B
            self.facet_cells = mesh.facet_B_cell
        else:
            self.facets = mesh.facets_L
            from .meshing import SOLID

            if side == SOLID:
                self.facet_cells = mesh.facet_L_solid
            else:
                self.facet_cells = mesh.facet_L_fluid
        self.side = side
        self.nfacets = len(self.facets)

        vused = np.unique(self.facets) if self.nfacets else np.array([], dtype=np.int64)
        self.vertex_dof = {int(v): i for i, v in enumerate(vused)}
        coords = [mesh.vertices[vused]] if len(vused) else [np.empty((0, d))]
        vdofs = (
            np.vectorize(self.vertex_dof.__getitem__)(self.facets)
            if self.nfacets
            else np.empty((0, d), dtype=np.int64)
        )
        facet_dofs = vdofs
        self.edge_dof = {}
        if degree == 2 and self.nfacets:
            fedges = _edge_list(d - 1)  # edges of the facet simplex
            ecols = []
            next_dof = len(vused)
            mids = []
            for (i, j) in fedges:
                pairs = np.sort(self.facets[:, [i, j]], axis=1)
                col = np.empty(self.nfacets, dtype=np.int64)
                for c, (a, b) in enumerate(pairs):
                    key = (int(a), int(b))
                    dof = self.edge_dof.get(key)
                    if dof is None:
                        dof = next_dof
                        self.edge_dof[key] = dof
                        mids.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
                        next_dof += 1
                    col[c] = dof
                ecols.append(col)
            facet_dofs = np.column_stack([vdofs] + ecols)
            if mids:
                coords.append(np.array(mids))
        self.facet_dofs = facet_dofs
        self.dof_coords = np.vstack(coords)
        self.ndof = len(self.dof_coords)
        self.nlocal = facet_dofs.shape[1] if self.nfacets else 0

        # facet geometry: measures and normals with the module-wide convention
        # (outward-from-fluid on GAMMA_L, outward-from-solid on GAMMA_B),
        # independent of the evaluation side
        pts = mesh.vertices[self.facets] if self.nfacets else np.empty((0, d, d))
        if d == 2:
            tang = pts[:, 1] - pts[:, 0]
            self.measures = np.linalg.norm(tang, axis=1)
        else:
            cr = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
            self.measures = 0.5 * np.linalg.norm(cr, axis=1)
        normal_owner = mesh.facet_L_fluid if tag == GAMMA_L else self.facet_cells
        self.normals = np.array(
            [mesh.facet_normal(f, c) for f, c in zip(self.facets, normal_owner)]
        ).reshape(self.nfacets, d)

        # facet quadrature (a (d-1)-simplex rule)
        self.qp_ref, self.qw_ref = simplex_quadrature(d - 1, quad_points)
        self.nq = len(self.qw_ref)
        self.phi, _ = basis_tables(d - 1, degree, self.qp_ref)
        lam = _barycentric(self.qp_ref)
        if self.nfacets:
            self.qpoints = np.einsum("ql,cli->cqi", lam, pts)
            vol = 1.0 / np.prod(range(1, d))  # reference facet volume
            self.qweights = (self.measures / vol)[:, None] * self.qw_ref[None, :]
        else:
            self.qpoints = np.empty((0, self.nq, d))
            self.qweights = np.empty((0, self.nq))

    @property
    def ndof_vec(self):
        return self.ndof * self.dim

    def vector_facet_dofs(self):
        d = self.dim
        return (self.facet_dofs[:, :, None] * d + np.arange(d)).reshape(self.nfacets, -1)

    def volume_dof_map(self, space):
        """Boundary dof -> dof index in the adjacent volume space."""
        out = np.empty(self.ndof, dtype=np.int64)
        for v, i in self.vertex_dof.items():
            out[i] = space.vertex_dof[v]
        for key, i in self.edge_dof.items():
            out[i] = space.edge_dof[key]
        return out

    def node_normals(self):
        """Facet-averaged unit normals at boundary nodes."""
        acc = np.zeros((self.ndof, self.dim))
        for f in range(self.nfacets):
            acc[self.facet_dofs[f]] += self.normals[f]
        norms = np.linalg.norm(acc, axis=1)
        norms[norms == 0.0] = 1.0
        return acc / norms[:, None]
