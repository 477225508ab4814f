"""Linear elastodynamics on the solid shell.

Traction-free outer boundary (natural), prescribed velocity on the interface
imposed strongly by integrating the boundary velocity in time into a
displacement constraint u(X, t) = u0(X) + int_0^t w. Time integration is
Newmark with beta = 1/4, gamma = 1/2 (average acceleration / implicit
midpoint), which conserves the discrete elastic energy of the unforced
problem.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import operators as ops
from . import tensors
from .fields import FieldSnapshot, Trajectory
from .meshing import GAMMA_B, GAMMA_L, SOLID
from .spaces import BoundarySpace, FunctionSpace


@dataclass
class ElasticProblem:
    mesh: object
    mat: object
    u0: FieldSnapshot
    u1: FieldSnapshot
    gamma_L_velocity: Trajectory  # boundary vector data w on Gamma_L
    body_force: Optional[Trajectory] = None  # solid vector data, for manufactured runs
    # stress matrix callable (pts, t) -> (..., d, d) applied against the outer
    # normal; replaces the traction-free outer condition in manufactured runs
    gamma_B_traction: Optional[object] = None
    t0: float = 0.0
    T: float = 1.0
    dt: float = 0.05


@dataclass
class SolidTrajectory:
    u: Trajectory
    u_t: Trajectory
    u_tt: Trajectory
    traction_gamma_L: Trajectory  # nodal one-sided P(u) n on the interface
    traction_gamma_B_residual: np.ndarray  # per-level L2(Gamma_B) of P(u) n
    space: object = None
    bspace_L: object = None


def _number_of_steps(T, dt):
    nt = int(round(T / dt))
    if abs(nt * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("window length must be a multiple of dt")
    return nt


class ElasticOperator:
    """Assembled solid matrices and factorizations, reusable across solves."""

    def __init__(self, mesh, mat, dt, space=None):
        self.mesh = mesh
        self.mat = mat
        self.dt = dt
        self.space = space or FunctionSpace(mesh, SOLID, 2)
        self.bL = BoundarySpace(mesh, GAMMA_L, 2, side=SOLID)
        self.bB = BoundarySpace(mesh, GAMMA_B, 2, side=SOLID)
        d = self.space.dim
        self.M = mat.rho_solid * ops.vector_mass(self.space)
        self.K = ops.elastic_stiffness(self.space, mat.lam, mat.mu_hat)
        vmap = self.bL.volume_dof_map(self.space)
        self.cdofs = (vmap[:, None] * d + np.arange(d)).ravel()
        self.free = np.setdiff1d(np.arange(self.space.ndof_vec), self.cdofs)
        S = (self.M + 0.25 * dt * dt * self.K).tocsc()
        self.S_fc = S[np.ix_(self.free, self.cdofs)]
        self.lu = spla.splu(S[np.ix_(self.free, self.free)].tocsc())
        M_csc = self.M.tocsc()
        self.M_fc = M_csc[np.ix_(self.free, self.cdofs)]
        self.lu_mass = spla.splu(M_csc[np.ix_(self.free, self.free)])
        self.vmap = vmap
        self.M_csr = self.M.tocsr()
        self.K_csr = self.K.tocsr()


def solve_elastic(problem, operator=None):
    """Newmark time-stepping of the solid problem; returns a SolidTrajectory."""
    mesh, mat = problem.mesh, problem.mat
    op = operator or ElasticOperator(mesh, mat, problem.dt)
    if abs(op.dt - problem.dt) > 1e-14:
        raise ValueError("operator was assembled for a different time step")
    space = op.space
    d = space.dim
    bL, bB = op.bL, op.bB

    nsteps = _number_of_steps(problem.T, problem.dt)
    nt = nsteps + 1
    dt = problem.dt
    w = problem.gamma_L_velocity
    if w.nt != nt:
        raise ValueError("boundary velocity trajectory does not match the window")

    vmap = op.vmap
    cdofs, free = op.cdofs, op.free
    lu, S_fc = op.lu, op.S_fc
    M_csr, K_csr = op.M_csr, op.K_csr

    def body_load(n):
        out = np.zeros(space.ndof_vec)
        if problem.body_force is not None:
            f_qp = ops.eval_vector_qp(space, problem.body_force.values[n])
            out += ops.load_vector(space, f_qp)
        if problem.gamma_B_traction is not None:
            t = problem.t0 + n * dt
            P_qp = problem.gamma_B_traction(bB.qpoints, t)
            t_qp = np.einsum("fqab,fb->fqa", P_qp, bB.normals)
            out += ops.load_boundary_vector(bB, space, t_qp)
        return out

    # prescribed interface displacement: u0 trace + cumulative trapezoid of w
    u_c = np.empty((nt, len(cdofs)))
    u_c[0] = problem.u0.values[vmap].ravel()
    acc = np.zeros(len(cdofs))
    for n in range(1, nt):
        acc = acc + 0.5 * dt * (w.values[n - 1] + w.values[n]).ravel()
        u_c[n] = u_c[0] + acc

    u = np.empty((nt, space.ndof_vec))
    v = np.empty_like(u)
    a = np.empty_like(u)
    u[0] = problem.u0.values.ravel()
    v[0] = problem.u1.values.ravel()
    # initial acceleration: momentum balance on free dofs, boundary data rate
    # on constrained dofs
    if nt >= 3:
        a0_c = (-3.0 * w.values[0] + 4.0 * w.values[1] - w.values[2]).ravel() / (2.0 * dt)
    else:
        a0_c = (w.values[-1] - w.values[0]).ravel() / dt
    r0 = body_load(0) - K_csr @ u[0]
    a[0, cdofs] = a0_c
    a[0, free] = op.lu_mass.solve(r0[free] - op.M_fc @ a0_c)

    for n in range(nsteps):
        u_pred = u[n] + dt * v[n] + 0.25 * dt * dt * a[n]
        a_next_c = (4.0 / (dt * dt)) * (u_c[n + 1] - u_c[n] - dt * v[n, cdofs]) - a[n, cdofs]
        rhs = body_load(n + 1) - K_csr @ u_pred
        a_next_f = lu.solve(rhs[free] - S_fc @ a_next_c)
        a[n + 1, free] = a_next_f
        a[n + 1, cdofs] = a_next_c
        v[n + 1] = v[n] + 0.5 * dt * (a[n] + a[n + 1])
        u[n + 1] = u_pred + 0.25 * dt * dt * a[n + 1]

    shape = (nt, space.ndof, d)
    u_traj = Trajectory(space, "vector", u.reshape(shape), problem.t0, dt)
    v_traj = Trajectory(space, "vector", v.reshape(shape), problem.t0, dt)
    a_traj = Trajectory(space, "vector", a.reshape(shape), problem.t0, dt)

    traction = np.empty((nt, bL.ndof, d))
    nrm = bL.node_normals()
    for n in range(nt):
        G = ops.one_sided_gradient_nodes(space, bL, u_traj.values[n])
        P = tensors.piola_stress(G, mat)
        traction[n] = np.einsum("nab,nb->na", P, nrm)
    traction_traj = Trajectory(bL, "vector", traction, problem.t0, dt)

    resid_B = np.empty(nt)
    nrmB = bB.node_normals()
    for n in range(nt):
        G = ops.one_sided_gradient_nodes(space, bB, u_traj.values[n])
        P = tensors.piola_stress(G, mat)
        tB = np.einsum("nab,nb->na", P, nrmB)
        resid_B[n] = ops.boundary_norm_L2(bB, tB)

    return SolidTrajectory(u_traj, v_traj, a_traj, traction_traj, resid_B, space, bL)


def interface_traction(solution, mesh, mat):
    """One-sided P(u) n on the interface from the solid side (nodal field)."""
    return solution.traction_gamma_L


def elastic_energy(solution, mat):
    """Per-level discrete elastic energy and its parts.

    Returns dict of arrays: kinetic, dilational, shear, total.
    """
    space = solution.space
    nt = solution.u.nt
    kin = np.empty(nt)
    dil = np.empty(nt)
    shear = np.empty(nt)
    for n in range(nt):
        ut = solution.u_t.values[n]
        kin[n] = 0.5 * mat.rho_solid * ops.norm_L2(space, ut) ** 2
        G = ops.grad_vector_qp(space, solution.u.values[n])
        div = np.trace(G, axis1=-2, axis2=-1)
        E = tensors.symmetric_part(G)
        dil[n] = 0.5 * mat.lam * float((space.qweights * div**2).sum())
        shear[n] = mat.mu_hat * float((space.qweights * (E**2).sum(axis=(-1, -2))).sum())
    return {
        "kinetic": kin,
        "dilational": dil,
        "shear": shear,
        "total": kin + dil + shear,
    }
