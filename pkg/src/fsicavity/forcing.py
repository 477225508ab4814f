"""Frozen-deformation coupling data for the fluid sub-problem.

Given iterates (v~, p~), the solid interface traction and a frozen flow map,
this module assembles the three forcing channels of the fluid problem:

* the divergence forcing g = (I - cof F) : grad(v~);
* the momentum forcing, which in strong form is the divergence of the stress
  mismatch T_map(v~, p~) - T(v~, p~); it is assembled weakly as
  -(T_map - T, grad(phi)) because the strong form differentiates the
  piecewise-polynomial cofactor field, and the matching boundary term cancels
  against the mismatch part of the interface load, leaving int_Gamma (P n).phi;
* the full interface load d = [T - T_map + P(u)] n as a nodal boundary field
  (diagnostics and one-way transfer audits).

All channels are linear in (v~, p~, u) for a fixed flow map.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import operators as ops
from . import tensors
from .fields import Trajectory


@dataclass
class ForcingBundle:
    """Forcing trajectories plus the assembled weak (dual) channels."""

    g: Trajectory  # P1 scalar nodal field, divergence forcing
    f: Trajectory  # P2 vector nodal field, strong-form momentum forcing (diagnostic)
    d: Trajectory  # boundary vector nodal field, full interface load
    momentum_dual: np.ndarray  # (nt, ndof_v * dim)
    constraint_dual: np.ndarray  # (nt, ndof_p)
    source_iteration: int = 0


def _check_grids(*trajs):
    first = trajs[0]
    for other in trajs[1:]:
        if other is None:
            continue
        if first.nt != other.nt or abs(first.dt - other.dt) > 1e-14:
            raise ValueError("forcing inputs do not share a time grid")


def _vertex_values(space2, space1, nodal):
    """Restrict P2 nodal values to the P1 vertex dofs (shared numbering)."""
    return nodal[: space1.ndof]


def divergence_forcing(v_tilde, defo, pspace):
    """Nodal P1 trajectory of (I - cof F) : grad(v~)."""
    _check_grids(v_tilde)
    if defo.nt != v_tilde.nt:
        raise ValueError("deformation history does not share the velocity time grid")
    space = v_tilde.space
    d = space.dim
    I = np.eye(d)
    out = np.empty((v_tilde.nt, pspace.ndof))
    for n in range(v_tilde.nt):
        G = ops.nodal_gradient(space, v_tilde.values[n])
        g = np.einsum("nab,nab->n", I - defo.cof[n], G)
        out[n] = _vertex_values(space, pspace, g)
    return Trajectory(pspace, "scalar", out, v_tilde.t0, v_tilde.dt)


def _delta_stress_qp(v_tilde, p_tilde, defo, mat, n):
    """T_map(v~, p~) - T(v~, p~) at quadrature points of the fluid space."""
    space = v_tilde.space
    G = ops.grad_vector_qp(space, v_tilde.values[n])
    p_qp = ops.eval_scalar_qp(p_tilde.space, p_tilde.values[n])
    cof = defo.cof_qp(n)
    T_map = tensors.transformed_stress(G, p_qp, cof, mat)
    T = tensors.cauchy_stress(G, p_qp, mat)
    return T_map - T


def _p2_from_p1(space2, p1_values):
    """Extend P1 vertex values to the P2 space (exact: linear functions)."""
    out = np.empty(space2.ndof)
    nvert = len(p1_values)
    out[:nvert] = p1_values
    for (a, b), dof in space2.edge_dof.items():
        out[dof] = 0.5 * (p1_values[space2.vertex_dof[a]] + p1_values[space2.vertex_dof[b]])
    return out


def momentum_forcing_strong(v_tilde, p_tilde, defo, mat):
    """Pointwise nodal divergence of the stress mismatch (smooth diagnostics).

    Uses the nodal discrete gradient twice; reserved for closed-form tests.
    """
    _check_grids(v_tilde, p_tilde)
    space = v_tilde.space
    d = space.dim
    out = np.empty((v_tilde.nt, space.ndof, d))
    for n in range(v_tilde.nt):
        Gn = ops.nodal_gradient(space, v_tilde.values[n])
        pn = _p2_from_p1(space, p_tilde.values[n])
        dT = tensors.transformed_stress(Gn, pn, defo.cof[n], mat) - tensors.cauchy_stress(
            Gn, pn, mat
        )
        for a in range(d):
            row = np.ascontiguousarray(dT[:, a, :])
            out[n, :, a] = np.einsum("nbb->n", ops.nodal_gradient(space, row))
    return Trajectory(space, "vector", out, v_tilde.t0, v_tilde.dt)


def boundary_forcing(solid_traction, v_tilde, p_tilde, defo, mat, bspace, solid_bspace=None):
    """Full interface load [T - T_map + P(u)] n as a nodal boundary trajectory.

    solid_traction is the one-sided P(u) n trajectory from the elastic solve;
    the fluid-side mismatch is evaluated one-sided from the fluid region, all
    against the fluid-outward normal.
    """
    _check_grids(v_tilde, p_tilde, solid_traction)
    space = v_tilde.space
    nrm = bspace.node_normals()
    vmap = bspace.volume_dof_map(space)
    out = np.empty((v_tilde.nt, bspace.ndof, space.dim))
    for n in range(v_tilde.nt):
        G_b = ops.one_sided_gradient_nodes(space, bspace, v_tilde.values[n])
        p_b = _p2_from_p1(space, p_tilde.values[n])[vmap]
        cof_b = defo.cof[n][vmap]
        dT = tensors.transformed_stress(G_b, p_b, cof_b, mat) - tensors.cauchy_stress(
            G_b, p_b, mat
        )
        out[n] = solid_traction.values[n] - np.einsum("nab,nb->na", dT, nrm)
    return Trajectory(bspace, "vector", out, v_tilde.t0, v_tilde.dt)


def stress_mismatch_trajectory(v_tilde, defo):
    """Nodal tensor trajectory S = 2 D(v~) - grad(v~) cof^T cof - cof grad(v~)^T cof.

    Factored evaluation (products against I - cof); vanishes identically for
    the identity deformation.
    """
    space = v_tilde.space
    d = space.dim
    out = np.empty((v_tilde.nt, space.ndof, d, d))
    for n in range(v_tilde.nt):
        G = ops.nodal_gradient(space, v_tilde.values[n])
        out[n] = tensors.stress_mismatch(G, defo.cof[n])
    return Trajectory(space, "tensor", out, v_tilde.t0, v_tilde.dt)


def assemble_forcing(
    v_tilde,
    p_tilde,
    solid_traction_qp,
    solid_traction_nodal,
    defo,
    mat,
    vspace,
    pspace,
    bspace,
    iteration=0,
):
    """Build the ForcingBundle for one inner iteration.

    solid_traction_qp : (nt, nfacets, nq, d) one-sided P(u) n at interface
                        facet quadrature points (fluid-outward normal)
    solid_traction_nodal : boundary Trajectory of the same traction (nodal)
    """
    nt = v_tilde.nt
    d = vspace.dim
    I = np.eye(d)
    momentum = np.empty((nt, vspace.ndof_vec))
    constraint = np.empty((nt, pspace.ndof))
    for n in range(nt):
        dT = _delta_stress_qp(v_tilde, p_tilde, defo, mat, n)
        momentum[n] = -ops.load_gradtest(vspace, dT)
        momentum[n] += ops.load_boundary_vector(bspace, vspace, solid_traction_qp[n])
        G = ops.grad_vector_qp(vspace, v_tilde.values[n])
        g_qp = np.einsum("cqab,cqab->cq", I - defo.cof_qp(n), G)
        constraint[n] = ops.load_scalar(pspace, g_qp)

    g = divergence_forcing(v_tilde, defo, pspace)
    f = momentum_forcing_strong(v_tilde, p_tilde, defo, mat)
    dtraj = boundary_forcing(solid_traction_nodal, v_tilde, p_tilde, defo, mat, bspace)
    return ForcingBundle(g, f, dtraj, momentum, constraint, iteration)
