"""Non-homogeneous Stokes solver on the fluid cavity.

Mixed P2/P1 (velocity, pressure) with the stress boundary condition on the
whole fluid boundary entering weakly; the traction condition fixes the
pressure, so the saddle-point system is nonsingular. Time integration is
Crank-Nicolson for the momentum equation with the divergence constraint
enforced at the new time level; an optional backward-Euler first step damps
transients from incompatible data.

Forcing enters through three channels per time level:
  * nodal trajectories g (P1 scalar), f (P2 vector), d (interface vector);
  * optional pre-assembled dual vectors (momentum_dual, constraint_dual) for
    weak-form couplings whose strong form is not representable nodally.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import operators as ops
from . import tensors
from .errors import CompatibilityError
from .fields import FieldSnapshot, Trajectory
from .meshing import FLUID, GAMMA_L
from .spaces import BoundarySpace, FunctionSpace


@dataclass
class StokesProblem:
    mesh: object
    mat: object
    v0: FieldSnapshot
    g: Optional[Trajectory] = None  # prescribed divergence, P1 scalar on FLUID
    f: Optional[Trajectory] = None  # body force, P2 vector on FLUID
    # boundary stress data on GAMMA_L: either a nodal vector Trajectory of
    # tractions, or a stress-matrix callable (pts, t) -> (..., d, d) applied
    # against per-facet normals (exact route for manufactured solutions)
    d: Optional[object] = None
    momentum_dual: Optional[np.ndarray] = None  # (nt, ndof_v * d)
    constraint_dual: Optional[np.ndarray] = None  # (nt, ndof_p)
    t0: float = 0.0
    T: float = 1.0
    dt: float = 0.05
    compat_tol: float = 1e-3
    first_step_backward_euler: bool = False


@dataclass
class FluidTrajectory:
    v: Trajectory
    p: Trajectory
    v_t: Trajectory
    stress_gamma_L: Trajectory
    div_residual: np.ndarray  # per-level L2 norm of the discrete constraint residual
    space: object = None
    pspace: object = None
    bspace: object = None


class StokesOperator:
    """Assembled matrices and factorizations reused across solves."""

    def __init__(self, mesh, mat, dt, first_step_backward_euler=False):
        self.mesh = mesh
        self.mat = mat
        self.dt = dt
        self.space = FunctionSpace(mesh, FLUID, 2)
        self.pspace = FunctionSpace(mesh, FLUID, 1)
        self.bspace = BoundarySpace(mesh, GAMMA_L, 2, side=FLUID)
        self.M = ops.vector_mass(self.space)
        self.A = ops.viscous_stiffness(self.space, mat.mu)
        self.B = ops.divergence_matrix(self.space, self.pspace)
        self.Mp = ops.scalar_mass(self.pspace)
        self.Mp_lu = spla.splu(self.Mp.tocsc())
        nv, npb = self.space.ndof_vec, self.pspace.ndof
        rho = mat.rho_fluid

        def saddle(vel_block):
            return sp.bmat([[vel_block, -self.B.T], [self.B, None]], format="csc")

        self.lu_cn = spla.splu(saddle(rho / dt * self.M + 0.5 * self.A))
        self.lu_be = spla.splu(saddle(rho / dt * self.M + self.A)) if first_step_backward_euler else None
        self.lu_init = spla.splu(saddle(rho * self.M))
        self.nv, self.np = nv, npb

    def constraint_residual(self, v_flat, G_n):
        r = self.B @ v_flat - G_n
        return float(np.sqrt(abs(r @ self.Mp_lu.solve(r))))


def _momentum_rhs(op, problem, n):
    rhs = np.zeros(op.nv)
    if problem.f is not None:
        f_qp = ops.eval_vector_qp(op.space, problem.f.values[n])
        rhs += ops.load_vector(op.space, f_qp)
    if problem.d is not None:
        if isinstance(problem.d, Trajectory):
            d_qp = ops.eval_boundary_qp(op.bspace, problem.d.values[n])
        else:
            t = problem.t0 + n * problem.dt
            T_qp = problem.d(op.bspace.qpoints, t)
            d_qp = np.einsum("fqab,fb->fqa", T_qp, op.bspace.normals)
        rhs += ops.load_boundary_vector(op.bspace, op.space, d_qp)
    if problem.momentum_dual is not None:
        rhs += problem.momentum_dual[n]
    return rhs


def _constraint_rhs(op, problem, n):
    G = np.zeros(op.np)
    if problem.g is not None:
        g_qp = ops.eval_scalar_qp(op.pspace, problem.g.values[n])
        G += ops.load_scalar(op.pspace, g_qp)
    if problem.constraint_dual is not None:
        G += problem.constraint_dual[n]
    return G


def solve_stokes(problem, operator=None):
    """Time-discrete mixed solution of the fluid problem."""
    mesh, mat = problem.mesh, problem.mat
    dt = problem.dt
    nsteps = int(round(problem.T / dt))
    if abs(nsteps * dt - problem.T) > 1e-9 * max(1.0, problem.T):
        raise ValueError("window length must be a multiple of dt")
    nt = nsteps + 1
    op = operator or StokesOperator(mesh, mat, dt, problem.first_step_backward_euler)
    space, pspace = op.space, op.pspace
    rho = mat.rho_fluid

    F = np.array([_momentum_rhs(op, problem, n) for n in range(nt)])
    G = np.array([_constraint_rhs(op, problem, n) for n in range(nt)])

    v = np.empty((nt, op.nv))
    p = np.empty((nt, op.np))
    v[0] = problem.v0.values.ravel()

    # initial compatibility: discrete div v0 must match g(. , t0)
    r0 = op.constraint_residual(v[0], G[0])
    if r0 > problem.compat_tol:
        raise CompatibilityError(
            f"initial divergence residual {r0:.3e} exceeds tolerance {problem.compat_tol:.3e}"
        )

    # compatible initialization: solve for (dv/dt(0), p(0))
    if nt >= 3:
        Gdot0 = (-3.0 * G[0] + 4.0 * G[1] - G[2]) / (2.0 * dt)
    else:
        Gdot0 = (G[-1] - G[0]) / dt
    rhs0 = np.concatenate([F[0] - op.A @ v[0], Gdot0])
    x0 = op.lu_init.solve(rhs0)
    p[0] = x0[op.nv :]
    vt0 = x0[: op.nv]

    div_res = np.empty(nt)
    div_res[0] = r0
    for n in range(nsteps):
        if n == 0 and problem.first_step_backward_euler and op.lu_be is not None:
            rhs_v = rho / dt * (op.M @ v[0]) + F[1]
            x = op.lu_be.solve(np.concatenate([rhs_v, G[1]]))
        else:
            rhs_v = rho / dt * (op.M @ v[n]) - 0.5 * (op.A @ v[n]) + 0.5 * (F[n] + F[n + 1])
            x = op.lu_cn.solve(np.concatenate([rhs_v, G[n + 1]]))
        v[n + 1] = x[: op.nv]
        p[n + 1] = x[op.nv :]
        div_res[n + 1] = op.constraint_residual(v[n + 1], G[n + 1])

    d = space.dim
    shape = (nt, space.ndof, d)
    v_traj = Trajectory(space, "vector", v.reshape(shape), problem.t0, dt)
    p_traj = Trajectory(pspace, "scalar", p, problem.t0, dt)
    v_t = v_traj.time_derivative()
    v_t.values[0] = vt0.reshape(space.ndof, d)

    stress = _boundary_stress(op, mat, v_traj, p_traj)
    return FluidTrajectory(v_traj, p_traj, v_t, stress, div_res, space, pspace, op.bspace)


def _boundary_stress(op, mat, v_traj, p_traj):
    bL = op.bspace
    nt = v_traj.nt
    d = op.space.dim
    nrm = bL.node_normals()
    pmap = _pressure_at_boundary_nodes(op)
    out = np.empty((nt, bL.ndof, d))
    for n in range(nt):
        G = ops.one_sided_gradient_nodes(op.space, bL, v_traj.values[n])
        p_b = pmap @ p_traj.values[n]
        T = tensors.cauchy_stress(G, p_b, mat)
        out[n] = np.einsum("nab,nb->na", T, nrm)
    return Trajectory(bL, "vector", out, v_traj.t0, v_traj.dt)


def _pressure_at_boundary_nodes(op):
    """Sparse map evaluating the P1 pressure at interface P2 nodes."""
    bL, pspace = op.bspace, op.pspace
    rows, cols, vals = [], [], []
    for v, i in bL.vertex_dof.items():
        rows.append(i)
        cols.append(pspace.vertex_dof[v])
        vals.append(1.0)
    for (a, b), i in bL.edge_dof.items():
        rows.extend([i, i])
        cols.extend([pspace.vertex_dof[a], pspace.vertex_dof[b]])
        vals.extend([0.5, 0.5])
    return sp.csr_matrix((vals, (rows, cols)), shape=(bL.ndof, pspace.ndof))


def fluid_boundary_stress(solution, mesh, mat):
    """One-sided Cauchy stress times the fluid-outward normal on the interface."""
    return solution.stress_gamma_L
