"""Post-hoc verification instruments: energy balance and continuous dependence.

The energy balance of the coupled system is evaluated in reference
coordinates (the fluid Jacobian is 1 up to the reported tolerance), with
centered time differences for the rate term. The continuous-dependence
experiment reruns the solver on perturbed data and reports the ratio of
solution-difference to data-difference norms.
"""

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from . import tensors


@dataclass
class EnergyReport:
    times: np.ndarray
    kinetic_fluid: np.ndarray
    kinetic_solid: np.ndarray
    elastic_div: np.ndarray
    elastic_strain: np.ndarray
    dissipation_rate: np.ndarray  # 2 mu ||D(v)||^2 per level
    dissipation: np.ndarray  # cumulative trapezoid of the rate
    balance_residual: np.ndarray  # d/dt(total) + rate, centered differences

    @property
    def total(self):
        return self.kinetic_fluid + self.kinetic_solid + self.elastic_div + self.elastic_strain

    @property
    def integrated_residual(self):
        """|E(T) - E(0) + cumulative dissipation|, the net balance drift."""
        total = self.total
        return float(abs(total[-1] - total[0] + self.dissipation[-1]))


def energy_report(solid_sol, fluid_sol, mat):
    """Per-level energy parts and the discrete balance residual."""
    su, sf = solid_sol.u.space, fluid_sol.v.space
    if solid_sol.u.nt != fluid_sol.v.nt or abs(solid_sol.u.dt - fluid_sol.v.dt) > 1e-14:
        raise ValueError("solid and fluid trajectories do not share a time grid")
    nt = fluid_sol.v.nt
    dt = fluid_sol.v.dt

    kin_f = np.empty(nt)
    kin_s = np.empty(nt)
    el_div = np.empty(nt)
    el_str = np.empty(nt)
    rate = np.empty(nt)
    for n in range(nt):
        v = fluid_sol.v.values[n]
        kin_f[n] = 0.5 * mat.rho_fluid * ops.norm_L2(sf, v) ** 2
        Gv = ops.grad_vector_qp(sf, v)
        D = tensors.symmetric_part(Gv)
        rate[n] = 2.0 * mat.mu * float((sf.qweights * (D**2).sum(axis=(-1, -2))).sum())
        ut = solid_sol.u_t.values[n]
        kin_s[n] = 0.5 * mat.rho_solid * ops.norm_L2(su, ut) ** 2
        Gu = ops.grad_vector_qp(su, solid_sol.u.values[n])
        div = np.trace(Gu, axis1=-2, axis2=-1)
        E = tensors.symmetric_part(Gu)
        el_div[n] = 0.5 * mat.lam * float((su.qweights * div**2).sum())
        el_str[n] = mat.mu_hat * float((su.qweights * (E**2).sum(axis=(-1, -2))).sum())

    total = kin_f + kin_s + el_div + el_str
    diss = np.concatenate([[0.0], np.cumsum(0.5 * dt * (rate[1:] + rate[:-1]))])
    dtotal = np.gradient(total, dt, edge_order=2 if nt >= 3 else 1)
    return EnergyReport(
        times=fluid_sol.v.times,
        kinetic_fluid=kin_f,
        kinetic_solid=kin_s,
        elastic_div=el_div,
        elastic_strain=el_str,
        dissipation_rate=rate,
        dissipation=diss,
        balance_residual=dtotal + rate,
    )


# -- continuous dependence ---------------------------------------------------


def solution_difference_norm(solA, solB):
    """Surrogate strong-norm distance between two coupled solutions.

    Max-in-time H2/H1/L2 ladder for the solid plus the fluid velocity and
    pressure surrogate norms of the difference, over the common window.
    """
    from .fields import Trajectory
    from .fixedpoint import pressure_norm, velocity_norm

    nt = min(solA.fluid.v.nt, solB.fluid.v.nt)
    su = solA.u.u.space
    dv = Trajectory(
        solA.fluid.v.space,
        "vector",
        solA.fluid.v.values[:nt] - solB.fluid.v.values[:nt],
        solA.fluid.v.t0,
        solA.fluid.v.dt,
    )
    dp = Trajectory(
        solA.fluid.p.space,
        "scalar",
        solA.fluid.p.values[:nt] - solB.fluid.p.values[:nt],
        solA.fluid.p.t0,
        solA.fluid.p.dt,
    )
    du = solA.u.u.values[:nt] - solB.u.u.values[:nt]
    dut = solA.u.u_t.values[:nt] - solB.u.u_t.values[:nt]
    dutt = solA.u.u_tt.values[:nt] - solB.u.u_tt.values[:nt]
    solid_part = max(
        max(ops.norm_H2(su, du[n]) for n in range(nt)),
        max(ops.norm_H1(su, dut[n]) for n in range(nt)),
        max(ops.norm_L2(su, dutt[n]) for n in range(nt)),
    )
    return solid_part + velocity_norm(dv) + pressure_norm(dp)


def data_difference_norm(dataA, dataB):
    """Right-hand-side norm of the dependence estimate.

    (1 + |dv0|) |dv0| + |du0| + |du1| in the discrete surrogates of the data
    regularity classes (H2 proxies for the fractional orders).
    """
    su = dataA.u0.space
    sf = dataA.v0.space
    dv0 = dataA.v0.values - dataB.v0.values
    du0 = dataA.u0.values - dataB.u0.values
    du1 = dataA.u1.values - dataB.u1.values
    nv = ops.norm_H2(sf, dv0)
    return (1.0 + nv) * nv + ops.norm_H2(su, du0) + ops.fractional_norm_estimate(su, du1, 1.5)


def dependence_experiment(dataA, derivedA, dataB, derivedB, mesh, mat, cfg, workspace=None):
    """Solution-difference over data-difference ratio for two admissible data sets.

    Returns (ratio, solA, solB); a zero data difference returns ratio 0 after
    verifying the solution difference is at solver-tolerance level.
    """
    from .fixedpoint import CoupledWorkspace, outer_fixed_point

    ws = workspace or CoupledWorkspace(mesh, mat, cfg.dt, cfg.first_step_backward_euler)
    solA = outer_fixed_point(dataA, derivedA, mesh, mat, cfg, workspace=ws)
    solB = outer_fixed_point(dataB, derivedB, mesh, mat, cfg, workspace=ws)
    denom = data_difference_norm(dataA, dataB)
    num = solution_difference_norm(solA, solB)
    if denom < 1e-13:
        if num > 1e2 * max(cfg.tol_outer, cfg.tol_inner):
            raise RuntimeError(
                f"identical data produced solution difference {num:.3e} above tolerance"
            )
        return 0.0, solA, solB
    return num / denom, solA, solB
