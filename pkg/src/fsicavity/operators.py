"""Discrete operators: mass/stiffness/divergence assembly, loads, norms, traces.

All bilinear forms are integrated with the space's quadrature rule, which is
exact for the polynomial integrands appearing here. Vector dofs are node-major
and component-minor. Assembly accumulates COO triples in cell order, so
repeated runs produce bitwise-identical matrices.
"""

import numpy as np
import scipy.sparse as sp

from . import kernels


def _coo(space, elem, vector):
    dofs = space.vector_cell_dofs() if vector else space.cell_dofs
    n = space.ndof_vec if vector else space.ndof
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    return sp.csr_matrix((elem.ravel(), (rows, cols)), shape=(n, n))


def scalar_mass(space):
    """(u, v) on the space's region."""
    elem = np.einsum("cq,ql,qm->clm", space.qweights, space.phi, space.phi)
    return _coo(space, elem, vector=False)


def vector_mass(space):
    M = scalar_mass(space)
    return sp.kron(M, sp.identity(space.dim, format="csr"), format="csr")


def scalar_stiffness(space):
    """(grad u, grad v)."""
    elem = np.einsum("cq,cqli,cqmi->clm", space.qweights, space.grad_phi, space.grad_phi)
    return _coo(space, elem, vector=False)


def vector_laplace(space):
    K = scalar_stiffness(space)
    return sp.kron(K, sp.identity(space.dim, format="csr"), format="csr")


def elastic_stiffness(space, lam, mu_hat):
    """lam (div u, div v) + 2 mu_hat (E(u), E(v)) on vector dofs."""
    d = space.dim
    nl = space.nlocal
    G = space.grad_phi  # (c, q, l, i)
    W = space.qweights
    nld = nl * d
    elem = np.zeros((space.ncells, nld, nld))
    # div(u) for basis (l, a): d(phi_l)/dx_a; E(u):E(v) expands to
    # 1/2 (grad_i phi_l delta_ab grad_i phi_m + grad_b phi_l grad_a phi_m)
    div_lm = np.einsum("cq,cqla,cqmb->clamb", W, G, G)
    gg = np.einsum("cq,cqli,cqmi->clm", W, G, G)
    elem_v = lam * div_lm
    elem_v += mu_hat * np.einsum("cqlb,cq,cqma->clamb", G, W, G)
    eye = np.eye(d)
    elem_v += mu_hat * np.einsum("clm,ab->clamb", gg, eye)
    elem = elem_v.reshape(space.ncells, nld, nld)
    return _coo(space, elem, vector=True)


def viscous_stiffness(space, mu):
    """2 mu (D(u), D(v)) on vector dofs."""
    return elastic_stiffness(space, 0.0, mu)


def divergence_matrix(vspace, pspace):
    """B[q, v] = (q, div v), shape (ndof_p, ndof_v * d).

    Both spaces must be built over the same region of the same mesh (their
    cell lists then coincide).
    """
    if vspace.ncells != pspace.ncells:
        raise ValueError("velocity and pressure spaces disagree on the region")
    d = vspace.dim
    W = vspace.qweights
    Gv = vspace.grad_phi
    lam_p = pspace.phi  # same reference points: both default quadrature
    elem = np.einsum("cq,qm,cqla->cmla", W, lam_p, Gv).reshape(
        vspace.ncells, pspace.nlocal, vspace.nlocal * d
    )
    rows = np.repeat(pspace.cell_dofs, vspace.nlocal * d, axis=1).ravel()
    cols = np.tile(vspace.vector_cell_dofs(), (1, pspace.nlocal)).ravel()
    return sp.csr_matrix(
        (elem.ravel(), (rows, cols)), shape=(pspace.ndof, vspace.ndof_vec)
    )


# -- loads -------------------------------------------------------------------


def load_scalar(space, values_qp):
    """(f, v) for f sampled at quadrature points, values_qp (ncr, nq)."""
    contrib = np.einsum("cq,ql->cl", space.qweights * values_qp, space.phi)
    out = np.zeros(space.ndof)
    kernels.scatter_add(out, space.cell_dofs, contrib)
    return out


def load_vector(space, values_qp):
    """(f, v) for vector f at quadrature points, values_qp (ncr, nq, d)."""
    contrib = np.einsum("cq,cqa,ql->cla", space.qweights, values_qp, space.phi)
    out = np.zeros(space.ndof_vec)
    kernels.scatter_add(out, space.vector_cell_dofs(), contrib.reshape(space.ncells, -1))
    return out


def load_gradtest(space, S_qp):
    """(S, grad v) = int S_ab d(v_a)/dx_b for tensor S at qps (ncr, nq, d, d)."""
    contrib = np.einsum("cq,cqab,cqlb->cla", space.qweights, S_qp, space.grad_phi)
    out = np.zeros(space.ndof_vec)
    kernels.scatter_add(out, space.vector_cell_dofs(), contrib.reshape(space.ncells, -1))
    return out


def load_boundary_vector(bspace, vspace, values_qp):
    """int_Gamma t . v assembled into volume vector dofs; values (nf, nq, d)."""
    if bspace.nfacets == 0:
        return np.zeros(vspace.ndof_vec)
    contrib = np.einsum("fq,fqa,ql->fla", bspace.qweights, values_qp, bspace.phi)
    vmap = bspace.volume_dof_map(vspace)
    d = bspace.dim
    facet_vec = (vmap[bspace.facet_dofs][:, :, None] * d + np.arange(d)).reshape(
        bspace.nfacets, -1
    )
    out = np.zeros(vspace.ndof_vec)
    kernels.scatter_add(out, facet_vec, contrib.reshape(bspace.nfacets, -1))
    return out


def boundary_mass(bspace):
    """(u, v) over the facet set (scalar)."""
    if bspace.nfacets == 0:
        return sp.csr_matrix((bspace.ndof, bspace.ndof))
    elem = np.einsum("fq,ql,qm->flm", bspace.qweights, bspace.phi, bspace.phi)
    rows = np.repeat(bspace.facet_dofs, bspace.nlocal, axis=1).ravel()
    cols = np.tile(bspace.facet_dofs, (1, bspace.nlocal)).ravel()
    return sp.csr_matrix((elem.ravel(), (rows, cols)), shape=(bspace.ndof, bspace.ndof))


# -- evaluation --------------------------------------------------------------


def eval_scalar_qp(space, values):
    return np.einsum("ql,cl->cq", space.phi, values[space.cell_dofs])


def eval_vector_qp(space, values):
    """values (ndof, d) -> (ncr, nq, d)."""
    return np.einsum("ql,cla->cqa", space.phi, values[space.cell_dofs])


def grad_scalar_qp(space, values):
    return np.einsum("cqli,cl->cqi", space.grad_phi, values[space.cell_dofs])


def grad_vector_qp(space, values):
    """values (ndof, d) -> (ncr, nq, d, d) with [a, b] = d(v_a)/dx_b."""
    return np.einsum("cqlb,cla->cqab", space.grad_phi, values[space.cell_dofs])


def hess_scalar_cell(space, values):
    """Cellwise-constant Hessian of a P2 scalar field, (ncr, d, d)."""
    return np.einsum("clab,cl->cab", space.hess_phi, values[space.cell_dofs])


def nodal_gradient(space, values):
    """Measure-weighted average over adjacent cells of the field gradient.

    Scalar values (ndof,) -> (ndof, d); vector values (ndof, d) -> (ndof, d, d).
    This is the discrete gradient used for nodewise tensor fields.
    """
    vector = values.ndim == 2
    lam = _nodal_ref_points(space)
    from .spaces import basis_tables

    _, grad_ref = basis_tables(space.dim, space.degree, lam)
    grad_phi_nodes = np.einsum("nli,cji->cnlj", grad_ref, space.A_invT)
    cellvals = values[space.cell_dofs]
    if vector:
        gnode = np.einsum("cnlb,cla->cnab", grad_phi_nodes, cellvals)
        acc = np.zeros((space.ndof, space.dim, space.dim))
    else:
        gnode = np.einsum("cnli,cl->cni", grad_phi_nodes, cellvals)
        acc = np.zeros((space.ndof, space.dim))
    wsum = np.zeros(space.ndof)
    w = space.cell_measure
    for ln in range(space.nlocal):
        dofs = space.cell_dofs[:, ln]
        np.add.at(acc, dofs, w[:, None, None] * gnode[:, ln] if vector else w[:, None] * gnode[:, ln])
        np.add.at(wsum, dofs, w)
    return acc / (wsum[:, None, None] if vector else wsum[:, None])


def _nodal_ref_points(space):
    """Reference simplex coordinates of the local nodes, (nl, d)."""
    d = space.dim
    verts = np.vstack([np.zeros(d), np.eye(d)])
    if space.degree == 1:
        return verts
    from .spaces import _edge_list

    mids = np.array([0.5 * (verts[i] + verts[j]) for i, j in _edge_list(d)])
    return np.vstack([verts, mids])


def interpolate_scalar(space, fn):
    return np.array([fn(x) for x in space.dof_coords])


def interpolate_vector(space, fn):
    return np.array([fn(x) for x in space.dof_coords]).reshape(space.ndof, space.dim)


# -- norms ---------------------------------------------------------------------


def norm_L2(space, values):
    if values.ndim == 1:
        v = eval_scalar_qp(space, values) ** 2
    else:
        v = (eval_vector_qp(space, values) ** 2).sum(axis=-1)
    return float(np.sqrt((space.qweights * v).sum()))


def seminorm_H1(space, values):
    if values.ndim == 1:
        g = grad_scalar_qp(space, values) ** 2
        v = g.sum(axis=-1)
    else:
        g = grad_vector_qp(space, values) ** 2
        v = g.sum(axis=(-1, -2))
    return float(np.sqrt((space.qweights * v).sum()))


def seminorm_H2(space, values):
    """Cellwise second-derivative seminorm; requires degree >= 2."""
    if space.degree < 2:
        raise ValueError("H2 seminorm needs a degree >= 2 space")
    meas = space.cell_measure
    if values.ndim == 1:
        H = hess_scalar_cell(space, values)
        v = (H**2).sum(axis=(-1, -2))
    else:
        v = 0.0
        for a in range(space.dim):
            H = hess_scalar_cell(space, np.ascontiguousarray(values[:, a]))
            v = v + (H**2).sum(axis=(-1, -2))
    return float(np.sqrt((meas * v).sum()))


def norm_H1(space, values):
    return float(np.hypot(norm_L2(space, values), seminorm_H1(space, values)))


def norm_H2(space, values):
    return float(
        np.sqrt(
            norm_L2(space, values) ** 2
            + seminorm_H1(space, values) ** 2
            + seminorm_H2(space, values) ** 2
        )
    )


def discrete_norm(space, values, kind):
    """Quadrature evaluation of L2 / H1 / H2seminorm on the field's region."""
    if kind == "L2":
        return norm_L2(space, values)
    if kind == "H1":
        return norm_H1(space, values)
    if kind == "H2seminorm":
        return seminorm_H2(space, values)
    raise ValueError(f"unsupported norm kind {kind!r}")


def fractional_norm_estimate(space, values, s):
    """Interpolation proxy ||f||_k^(1-t) ||f||_{k+1}^t with t = s - k.

    A diagnostic estimate of the H^s norm for s in [0, 2]; exact fractional
    norms are not computed on the mesh.
    """
    if not 0.0 <= s <= 2.0:
        raise ValueError("s must lie in [0, 2]")
    n0, n1, n2 = norm_L2(space, values), None, None
    if s <= 1.0:
        n1 = norm_H1(space, values)
        theta = s
        lo, hi = n0, n1
    else:
        n1 = norm_H1(space, values)
        n2 = norm_H2(space, values)
        theta = s - 1.0
        lo, hi = n1, n2
    if lo == 0.0 or hi == 0.0:
        return 0.0
    return float(lo ** (1.0 - theta) * hi**theta)


def boundary_norm_L2(bspace, values):
    """L2 norm over the facet set of a boundary nodal field."""
    if bspace.nfacets == 0:
        return 0.0
    if values.ndim == 1:
        v = np.einsum("ql,fl->fq", bspace.phi, values[bspace.facet_dofs]) ** 2
    else:
        v = (np.einsum("ql,fla->fqa", bspace.phi, values[bspace.facet_dofs]) ** 2).sum(axis=-1)
    return float(np.sqrt((bspace.qweights * v).sum()))


# -- traces and one-sided boundary evaluation -----------------------------------


def trace_extract(space, bspace, values):
    """Restrict a volume nodal field to the boundary space (shared nodes)."""
    vmap = bspace.volume_dof_map(space)
    return values[vmap]


def one_sided_gradient_nodes(space, bspace, values):
    """Gradient of a volume field at boundary nodes from the side cells.

    For each facet, the field gradient is evaluated at the facet's nodes
    inside the adjacent cell of the boundary space's side; contributions are
    averaged over the facets sharing a node. values (ndof, d) -> (nbdof, d, d),
    scalar values -> (nbdof, d).
    """
    vector = values.ndim == 2
    d = space.dim
    shape = (bspace.ndof, d, d) if vector else (bspace.ndof, d)
    acc = np.zeros(shape)
    cnt = np.zeros(bspace.ndof)
    cell_of = {int(g): i for i, g in enumerate(space.cell_ids)}
    from .spaces import basis_tables

    for f in range(bspace.nfacets):
        c = cell_of[int(bspace.facet_cells[f])]
        # locate facet nodes in the cell's reference coordinates
        lam = _facet_node_ref_coords(space, bspace, f, c)
        _, grad_ref = basis_tables(d, space.degree, lam)
        gphi = np.einsum("nli,ji->nlj", grad_ref, space.A_invT[c])
        cellvals = values[space.cell_dofs[c]]
        if vector:
            g = np.einsum("nlb,la->nab", gphi, cellvals)
        else:
            g = np.einsum("nli,l->ni", gphi, cellvals)
        dofs = bspace.facet_dofs[f]
        for k, bdof in enumerate(dofs):
            acc[bdof] += g[k]
            cnt[bdof] += 1.0
    cnt[cnt == 0.0] = 1.0
    return acc / cnt.reshape(-1, *([1] * (acc.ndim - 1)))


def one_sided_gradient_qp(space, bspace, values):
    """Gradient of a volume field at facet quadrature points (one-sided).

    values (ndof, d) -> (nf, nq, d, d); scalar -> (nf, nq, d).
    """
    vector = values.ndim == 2
    d = space.dim
    cell_of = {int(g): i for i, g in enumerate(space.cell_ids)}
    from .spaces import basis_tables

    out = None
    for f in range(bspace.nfacets):
        c = cell_of[int(bspace.facet_cells[f])]
        lam = _facet_qp_ref_coords(space, bspace, f, c)
        _, grad_ref = basis_tables(d, space.degree, lam)
        gphi = np.einsum("qli,ji->qlj", grad_ref, space.A_invT[c])
        cellvals = values[space.cell_dofs[c]]
        if vector:
            g = np.einsum("qlb,la->qab", gphi, cellvals)
            if out is None:
                out = np.zeros((bspace.nfacets, bspace.nq, d, d))
        else:
            g = np.einsum("qli,l->qi", gphi, cellvals)
            if out is None:
                out = np.zeros((bspace.nfacets, bspace.nq, d))
        out[f] = g
    if out is None:
        out = np.zeros((0, bspace.nq, d, d) if vector else (0, bspace.nq, d))
    return out


def eval_boundary_qp(bspace, values):
    """Evaluate a boundary nodal field at facet quadrature points."""
    if values.ndim == 1:
        return np.einsum("ql,fl->fq", bspace.phi, values[bspace.facet_dofs])
    return np.einsum("ql,fla->fqa", bspace.phi, values[bspace.facet_dofs])


def _cell_ref_coords(space, c, points):
    """Physical points -> reference simplex coordinates of cell c."""
    verts = space.mesh.vertices[space.cells[c]]
    A = (verts[1:] - verts[0]).T
    return np.linalg.solve(A, (points - verts[0]).T).T


def _facet_node_ref_coords(space, bspace, f, c):
    pts = bspace.dof_coords[bspace.facet_dofs[f]]
    return _cell_ref_coords(space, c, pts)


def _facet_qp_ref_coords(space, bspace, f, c):
    return _cell_ref_coords(space, c, bspace.qpoints[f])
