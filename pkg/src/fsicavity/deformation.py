"""Deformation states of the fluid region and field-level kinematic identities.

The flow map chi is a P2 vector field per time level; its gradient F, the
Jacobian J = det F and the cofactor tensor are stored nodewise using the
module-wide discrete gradient (measure-weighted average of cell gradients).
Assembly-facing evaluations at quadrature points use the exact gradient of
the same P2 field.
"""

import numpy as np

from . import operators as ops
from . import tensors
from .errors import DegenerateDeformation, SingularMatrixError
from .fields import Trajectory


class DeformationHistory:
    """Flow map trajectory with nodal F, J, cof F per time level."""

    def __init__(self, space, chi, t0, dt):
        self.space = space
        self.chi = np.asarray(chi, dtype=float)  # (nt, ndof, d)
        self.t0 = t0
        self.dt = dt
        nt = self.chi.shape[0]
        d = space.dim
        self.F = np.empty((nt, space.ndof, d, d))
        for n in range(nt):
            self.F[n] = ops.nodal_gradient(space, self.chi[n])
        self.J = tensors.det_field(self.F)
        self.cof = tensors.cofactor_field(self.F)

    @property
    def nt(self):
        return self.chi.shape[0]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.nt)

    def velocity(self):
        """Time derivative of the flow map (centered differences)."""
        return Trajectory(self.space, "vector", self.chi, self.t0, self.dt).time_derivative()

    def grad_qp(self, level):
        """Deformation gradient at quadrature points, (ncr, nq, d, d)."""
        return ops.grad_vector_qp(self.space, self.chi[level])

    def cof_qp(self, level):
        return tensors.cofactor_field(self.grad_qp(level))

    def check_positive_jacobian(self):
        bad = np.argwhere(self.J <= 0.0)
        if len(bad):
            n, node = bad[0]
            raise DegenerateDeformation(
                f"J <= 0 at node {node}, t = {self.times[n]:.6g} (J = {self.J[n, node]:.3e})",
                node=int(node),
                time=float(self.times[n]),
                value=float(self.J[n, node]),
            )

    def j_range(self):
        return float(self.J.min()), float(self.J.max())


def identity_deformation(space, nt, t0, dt):
    chi = np.broadcast_to(space.dof_coords, (nt,) + space.dof_coords.shape).copy()
    return DeformationHistory(space, chi, t0, dt)


def flow_map_from_velocity(v):
    """chi(X, t) = X + int_0^t v(X, s) ds by trapezoid quadrature per node.

    v is a fluid-velocity Trajectory; asserts J > 0 at every node and level.
    """
    space = v.space
    nt = v.nt
    chi = np.empty((nt,) + space.dof_coords.shape)
    chi[0] = space.dof_coords
    acc = np.zeros_like(space.dof_coords)
    for n in range(1, nt):
        acc = acc + 0.5 * v.dt * (v.values[n - 1] + v.values[n])
        chi[n] = space.dof_coords + acc
    state = DeformationHistory(space, chi, v.t0, v.dt)
    state.check_positive_jacobian()
    return state


# -- field-level identities ------------------------------------------------------


def lagrangian_divergence(space, v_values, cof_values):
    """Pointwise double contraction grad(v) : cof at the nodes.

    v_values (ndof, d) and cof_values (ndof, d, d) must live on the same
    space; the gradient is the module-wide nodal discrete gradient.
    """
    v_values = np.asarray(v_values, dtype=float)
    cof_values = np.asarray(cof_values, dtype=float)
    if v_values.shape != (space.ndof, space.dim) or cof_values.shape != (
        space.ndof,
        space.dim,
        space.dim,
    ):
        raise ValueError("field shapes do not match the shared discretization")
    G = ops.nodal_gradient(space, v_values)
    return np.einsum("nab,nab->n", G, cof_values)


def piola_condition_residual(space, cof_values):
    """Row-wise discrete divergence of a cofactor field, (ndof, d).

    Component alpha is sum_beta d(cof_ab)/dX_b with the nodal discrete
    gradient; identically zero (to round-off) for constant cofactors.
    """
    cof_values = np.asarray(cof_values, dtype=float)
    d = space.dim
    out = np.empty((space.ndof, d))
    for a in range(d):
        row = np.ascontiguousarray(cof_values[:, a, :])  # (ndof, d)
        G = ops.nodal_gradient(space, row)  # (ndof, d, d): [b, X_b']
        out[:, a] = np.einsum("nbb->n", G)
    return out


def piola_condition_norm(space, chi_values):
    """Weak-form norm of div(cof(grad chi)) for a P2 flow-map snapshot.

    The cofactor is evaluated at quadrature points from the exact gradient of
    the discrete map, where the divergence identity holds cellwise; the
    residual functional r[q] = -(cof, grad q) + boundary term therefore
    measures exactly the inter-element mismatch. Reported in the H1-Riesz
    norm of the scalar test space.
    """
    cof_qp = tensors.cofactor_field(ops.grad_vector_qp(space, np.asarray(chi_values)))
    d = space.dim
    r = np.zeros((d, space.ndof))
    for a in range(d):
        row_qp = cof_qp[:, :, a, :]  # (ncr, nq, d)
        contrib = -np.einsum("cq,cqb,cqlb->cl", space.qweights, row_qp, space.grad_phi)
        np.add.at(r[a], space.cell_dofs.ravel(), contrib.ravel())
    r += _piola_boundary_term(space, chi_values)
    riesz = _h1_riesz_solver(space)
    return float(np.sqrt(sum(abs(r[a] @ riesz(r[a])) for a in range(d))))


def _piola_boundary_term(space, chi_values):
    """One-sided boundary contribution int (cof n) q over the cavity boundary."""
    from .meshing import FLUID, GAMMA_L
    from .spaces import BoundarySpace

    if space.region != FLUID:
        raise ValueError("the Piola-condition norm applies to fluid-region flow maps")
    d = space.dim
    bspace = BoundarySpace(space.mesh, GAMMA_L, space.degree, side=FLUID)
    out = np.zeros((d, space.ndof))
    if bspace.nfacets == 0:
        return out
    G = ops.one_sided_gradient_qp(space, bspace, np.asarray(chi_values))
    cof = tensors.cofactor_field(G)
    t_qp = np.einsum("fqab,fb->fqa", cof, bspace.normals)
    vmap = bspace.volume_dof_map(space)
    for a in range(d):
        contrib = np.einsum("fq,ql->fl", bspace.qweights * t_qp[:, :, a], bspace.phi)
        np.add.at(out[a], vmap[bspace.facet_dofs].ravel(), contrib.ravel())
    return out


_H1_RIESZ_CACHE = {}


def _h1_riesz_solver(space):
    key = id(space)
    if key not in _H1_RIESZ_CACHE:
        import scipy.sparse.linalg as spla

        A = (ops.scalar_mass(space) + ops.scalar_stiffness(space)).tocsc()
        _H1_RIESZ_CACHE[key] = spla.splu(A).solve
    return _H1_RIESZ_CACHE[key]


def inverse_rate_residual(F_traj, v_traj, space):
    """Max over time of || dF^{-1}/dt + F^{-1} grad(v) F^{-1} || (L2 in space).

    Time derivative by centered differences over interior levels; F must be
    invertible at every node and level.
    """
    F = np.asarray(F_traj, dtype=float)  # (nt, ndof, d, d)
    dets = tensors.det_field(F)
    if np.any(dets == 0.0):
        raise SingularMatrixError("deformation gradient is singular at some node/level")
    Finv = np.linalg.inv(F)
    nt = F.shape[0]
    dt = v_traj.dt
    worst = 0.0
    for n in range(1, nt - 1):
        dFinv = (Finv[n + 1] - Finv[n - 1]) / (2.0 * dt)
        G = ops.nodal_gradient(space, v_traj.values[n])
        resid = dFinv + Finv[n] @ G @ Finv[n]
        worst = max(worst, ops.norm_L2(space, resid.reshape(space.ndof, -1)))
    return worst
