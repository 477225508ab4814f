"""Nested fixed-point iterations of the partitioned scheme.

Inner loop: for a frozen flow map, iterate (v~, p~) -> solve the solid
problem with boundary velocity v~ -> assemble the coupling forcing -> solve
the fluid problem; a contraction in the discrete solution norms. Outer loop:
update the flow map from the converged fluid velocity and repeat. When either
loop stops contracting (three consecutive non-decreasing increments), the
time window is shrunk and the outer iteration restarts, mirroring the
small-time requirement of the underlying existence argument.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import operators as ops
from .deformation import DeformationHistory, flow_map_from_velocity, piola_condition_norm
from .diagnostics import energy_report
from .elastic import ElasticOperator, ElasticProblem, solve_elastic
from .errors import NonContraction, WindowCollapse
from .fields import FieldSnapshot, Trajectory, constant_trajectory
from .forcing import assemble_forcing
from .meshing import GAMMA_L, SOLID
from .spaces import BoundarySpace, FunctionSpace
from .stokes import StokesOperator, StokesProblem, solve_stokes


@dataclass
class FixedPointConfig:
    T: float = 0.5
    dt: float = 0.025
    tol_inner: float = 1e-8
    tol_outer: float = 1e-6
    max_inner: int = 40
    max_outer: int = 25
    shrink_factor: float = 0.5
    compat_tol: float = 1e-6
    first_step_backward_euler: bool = False
    deterministic: bool = True

    def __post_init__(self):
        if not 0.0 < self.dt < self.T:
            raise ValueError("need 0 < dt < T")
        if self.tol_inner <= 0.0 or self.tol_outer <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class IterationReport:
    inner_increments: list = field(default_factory=list)  # list per outer iteration
    outer_increments: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)  # outer successive quotients
    J_range: tuple = (1.0, 1.0)
    accepted_T: float = 0.0
    piola_residual: float = 0.0
    interface_mismatch: float = 0.0
    rows: list = field(default_factory=list)  # iterations.csv rows


@dataclass
class Solution:
    u: object  # SolidTrajectory
    fluid: object  # FluidTrajectory
    chi: DeformationHistory
    report: IterationReport


class CoupledWorkspace:
    """Spaces, operators and factorizations shared by all iterations."""

    def __init__(self, mesh, mat, dt, first_step_backward_euler=False):
        self.mesh = mesh
        self.mat = mat
        self.dt = dt
        self.stokes_op = StokesOperator(mesh, mat, dt, first_step_backward_euler)
        self.elastic_op = ElasticOperator(mesh, mat, dt)
        self.vspace = self.stokes_op.space
        self.pspace = self.stokes_op.pspace
        self.bspace_fluid = self.stokes_op.bspace
        self.bspace_solid = self.elastic_op.bL
        self.solid_space = self.elastic_op.space
        # interface nodes coincide for the two one-sided trace spaces
        assert np.allclose(self.bspace_fluid.dof_coords, self.bspace_solid.dof_coords)


# -- discrete surrogate norms ---------------------------------------------------


def _time_l2(dt, series):
    """Trapezoid-in-time l2 aggregation of a per-level norm sequence."""
    series = np.asarray(series, dtype=float) ** 2
    w = np.full(len(series), dt)
    w[0] = w[-1] = 0.5 * dt
    return float(np.sqrt((w * series).sum()))


def velocity_norm(traj):
    """Surrogate of the strong fluid norm: L2-in-time H2 + L2 of v_tt."""
    space = traj.space
    h2 = [ops.norm_H2(space, traj.values[n]) for n in range(traj.nt)]
    vtt = traj.second_time_derivative()
    l2tt = [ops.norm_L2(space, vtt.values[n]) for n in range(traj.nt)]
    return _time_l2(traj.dt, h2) + _time_l2(traj.dt, l2tt)


def pressure_norm(traj):
    """Surrogate of the pressure norm: L2-in-time H1 + L2 of p_t."""
    space = traj.space
    h1 = [ops.norm_H1(space, traj.values[n]) for n in range(traj.nt)]
    pt = traj.time_derivative()
    l2t = [ops.norm_L2(space, pt.values[n]) for n in range(traj.nt)]
    return _time_l2(traj.dt, h1) + _time_l2(traj.dt, l2t)


def flowmap_norm(traj):
    """Surrogate of the flow-map norm: L2-in-time H2 of (chi, chi_t) + L2 of chi_tt."""
    space = traj.space
    h2 = [ops.norm_H2(space, traj.values[n]) for n in range(traj.nt)]
    ct = traj.time_derivative()
    h2t = [ops.norm_H2(space, ct.values[n]) for n in range(ct.nt)]
    ctt = traj.second_time_derivative()
    l2tt = [ops.norm_L2(space, ctt.values[n]) for n in range(ctt.nt)]
    return _time_l2(traj.dt, h2) + _time_l2(traj.dt, h2t) + _time_l2(traj.dt, l2tt)


def contraction_estimate(increments):
    """Geometric mean of successive increment quotients."""
    increments = [float(x) for x in increments]
    if len(increments) < 2:
        raise ValueError("need at least two increments")
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0.0]
    if not ratios:
        return 0.0
    return float(np.exp(np.mean(np.log(ratios))))


# -- flow map -----------------------------------------------------------------


def flow_map_update(v):
    """chi = X + int_0^t v ds with recomputed F, J, cof per level (J > 0)."""
    return flow_map_from_velocity(v)


def seed_deformation(vspace, v0_values, nt, t0, dt):
    """Initial outer guess chi(X, t) = X + t * v0(X)."""
    times = t0 + dt * np.arange(nt) - t0
    chi = vspace.dof_coords[None] + times[:, None, None] * v0_values[None]
    return DeformationHistory(vspace, chi, t0, dt)


# -- inner fixed point -----------------------------------------------------------


def _interface_traction_qp(ws, solid_sol):
    """One-sided P(u) n at interface facet quadrature points, per level.

    Normals follow the fluid-outward convention shared by both trace spaces.
    """
    from . import tensors

    bs = ws.bspace_solid
    nt = solid_sol.u.nt
    out = np.empty((nt, bs.nfacets, bs.nq, ws.mesh.dim))
    for n in range(nt):
        G = ops.one_sided_gradient_qp(ws.solid_space, bs, solid_sol.u.values[n])
        P = tensors.piola_stress(G, ws.mat)
        out[n] = np.einsum("fqab,fb->fqa", P, bs.normals)
    return out


def check_inner_seed(chi_hat, v0_values, dt, tol_identity=1e-10):
    """Preconditions on the frozen flow map: identity at t0, rate v0 at t0."""
    X = chi_hat.space.dof_coords
    if np.abs(chi_hat.chi[0] - X).max() > tol_identity:
        raise ValueError("frozen flow map is not the identity at the initial time")
    rate = (chi_hat.chi[1] - chi_hat.chi[0]) / dt
    scale = max(1.0, np.abs(v0_values).max())
    if np.abs(rate - v0_values).max() > max(10.0 * dt * scale, 1e-8):
        raise ValueError("frozen flow map rate at t0 does not match the initial velocity")


def inner_fixed_point(chi_hat, data, derived, ws, cfg):
    """Iterate the fluid/solid pair for a frozen flow map.

    Returns (SolidTrajectory, FluidTrajectory, info dict with increments and
    contraction ratios). Raises NonContraction after three consecutive
    non-decreasing increments or when max_inner is exhausted.
    """
    nt = chi_hat.nt
    dt = cfg.dt
    T = (nt - 1) * dt
    mat, mesh = ws.mat, ws.mesh
    check_inner_seed(chi_hat, data.v0.values, dt)

    v_tilde = constant_trajectory(ws.vspace, "vector", data.v0.values, nt, data.v0.time, dt)
    p_tilde = constant_trajectory(ws.pspace, "scalar", derived.q0.values, nt, data.v0.time, dt)

    increments = []
    strikes = 0
    solid_sol = None
    fluid_sol = None
    for k in range(1, cfg.max_inner + 1):
        # solid problem driven by the current interface velocity
        vmap = ws.bspace_solid.volume_dof_map(ws.vspace)
        w_vals = v_tilde.values[:, vmap, :]
        w_traj = Trajectory(ws.bspace_solid, "vector", w_vals, v_tilde.t0, dt)
        eproblem = ElasticProblem(
            mesh, mat, data.u0, data.u1, w_traj, T=T, dt=dt, t0=v_tilde.t0
        )
        solid_sol = solve_elastic(eproblem, ws.elastic_op)

        traction_qp = _interface_traction_qp(ws, solid_sol)
        bundle = assemble_forcing(
            v_tilde,
            p_tilde,
            traction_qp,
            solid_sol.traction_gamma_L,
            chi_hat,
            mat,
            ws.vspace,
            ws.pspace,
            ws.bspace_fluid,
            iteration=k,
        )
        sproblem = StokesProblem(
            mesh,
            mat,
            data.v0,
            momentum_dual=bundle.momentum_dual,
            constraint_dual=bundle.constraint_dual,
            T=T,
            dt=dt,
            t0=v_tilde.t0,
            compat_tol=cfg.compat_tol,
            first_step_backward_euler=cfg.first_step_backward_euler,
        )
        fluid_sol = solve_stokes(sproblem, ws.stokes_op)

        dv = Trajectory(ws.vspace, "vector", fluid_sol.v.values - v_tilde.values, v_tilde.t0, dt)
        dp = Trajectory(ws.pspace, "scalar", fluid_sol.p.values - p_tilde.values, v_tilde.t0, dt)
        delta = velocity_norm(dv) + pressure_norm(dp)
        scale = velocity_norm(fluid_sol.v) + pressure_norm(fluid_sol.p)
        rel = delta / max(scale, 1e-14)
        increments.append(delta)

        v_tilde = fluid_sol.v
        p_tilde = fluid_sol.p

        if rel < cfg.tol_inner:
            break
        if len(increments) >= 2 and increments[-1] >= increments[-2]:
            strikes += 1
            if strikes >= 3:
                raise NonContraction(
                    f"inner iteration stopped contracting after {k} iterations"
                )
        else:
            strikes = 0
    else:
        raise NonContraction(f"inner iteration did not converge in {cfg.max_inner} iterations")

    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0.0]
    info = {"increments": increments, "ratios": ratios, "iterations": len(increments)}
    return solid_sol, fluid_sol, info


# -- outer fixed point -----------------------------------------------------------


def interface_velocity_mismatch(solid_sol, fluid_sol, ws):
    """Max over levels of the L2(Gamma_L) norm of v - du/dt."""
    bs, bf = ws.bspace_solid, ws.bspace_fluid
    smap = bs.volume_dof_map(ws.solid_space)
    fmap = bf.volume_dof_map(ws.vspace)
    worst = 0.0
    for n in range(fluid_sol.v.nt):
        diff = fluid_sol.v.values[n][fmap] - solid_sol.u_t.values[n][smap]
        worst = max(worst, ops.boundary_norm_L2(bf, diff))
    return worst


def outer_fixed_point(data, derived, mesh, mat, cfg, workspace=None):
    """Flow-map fixed point with time-window control.

    Returns a Solution; shrinks T by cfg.shrink_factor on non-contraction and
    raises WindowCollapse when the window falls below one time step.
    """
    ws = workspace or CoupledWorkspace(mesh, mat, cfg.dt, cfg.first_step_backward_euler)
    T = cfg.T
    dt = cfg.dt
    report = IterationReport()
    last_ratios = []

    while True:
        nsteps = int(round(T / dt))
        if nsteps < 1:
            raise WindowCollapse(
                f"time window shrunk below one step (T = {T:.3e}, dt = {dt:.3e})",
                ratios=last_ratios,
            )
        nt = nsteps + 1
        chi_hat = seed_deformation(ws.vspace, data.v0.values, nt, data.v0.time, dt)
        outer_increments = []
        inner_all = []
        rows = []
        try:
            solid_sol = fluid_sol = None
            converged = False
            strikes = 0
            for m in range(1, cfg.max_outer + 1):
                solid_sol, fluid_sol, info = inner_fixed_point(chi_hat, data, derived, ws, cfg)
                chi_new = flow_map_from_velocity(fluid_sol.v)
                dchi = Trajectory(
                    ws.vspace, "vector", chi_new.chi - chi_hat.chi, fluid_sol.v.t0, dt
                )
                delta = flowmap_norm(dchi)
                displacement = Trajectory(
                    ws.vspace,
                    "vector",
                    chi_new.chi - ws.vspace.dof_coords[None],
                    fluid_sol.v.t0,
                    dt,
                )
                scale = flowmap_norm(displacement)
                rel = delta / max(scale, 1e-14)
                outer_increments.append(delta)
                inner_all.append(info["increments"])
                jmin, jmax = chi_new.j_range()
                inner_ratio = (
                    contraction_estimate(info["increments"])
                    if len(info["increments"]) >= 2
                    else 0.0
                )
                e_resid = energy_report(solid_sol, fluid_sol, mat).integrated_residual
                for kk, inc in enumerate(info["increments"], start=1):
                    rows.append(
                        {
                            "outer_k": m,
                            "inner_k": kk,
                            "inner_increment": inc,
                            "ratio": inner_ratio,
                            "Jmin": jmin,
                            "Jmax": jmax,
                            "energy_residual": e_resid,
                        }
                    )
                chi_hat = chi_new
                if rel < cfg.tol_outer:
                    converged = True
                    break
                if len(outer_increments) >= 2 and outer_increments[-1] >= outer_increments[-2]:
                    strikes += 1
                    if strikes >= 3:
                        raise NonContraction("outer iteration stopped contracting")
                else:
                    strikes = 0
            if not converged:
                raise NonContraction(
                    f"outer iteration did not converge in {cfg.max_outer} iterations"
                )
        except NonContraction:
            last_ratios = (
                [b / a for a, b in zip(outer_increments, outer_increments[1:]) if a > 0.0]
            )
            T = cfg.shrink_factor * T
            continue

        report.inner_increments = inner_all
        report.outer_increments = outer_increments
        report.contraction_ratios = [
            b / a for a, b in zip(outer_increments, outer_increments[1:]) if a > 0.0
        ]
        report.J_range = chi_hat.j_range()
        report.accepted_T = T
        report.piola_residual = float(
            np.max(
                [piola_condition_norm(ws.vspace, chi_hat.chi[n]) for n in range(chi_hat.nt)]
            )
        )
        report.interface_mismatch = interface_velocity_mismatch(solid_sol, fluid_sol, ws)
        report.rows = rows
        return Solution(solid_sol, fluid_sol, chi_hat, report)
