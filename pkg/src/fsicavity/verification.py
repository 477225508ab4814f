"""Manufactured solutions and convergence studies for the two solver kernels.

Closed-form fields are substituted symbolically into the governing equations
to produce exact source terms; the discrete solutions are then compared
against the exact fields under (h, dt) refinement. 2D disk/annulus only.
"""

import numpy as np
import sympy as sym

from . import operators as ops
from .elastic import ElasticOperator, ElasticProblem, solve_elastic
from .fields import FieldSnapshot, Trajectory
from .materials import MaterialParams
from .meshing import FLUID, GAMMA_L, SOLID, GeometrySpec, build_reference_mesh
from .spaces import BoundarySpace, FunctionSpace
from .stokes import StokesProblem, solve_stokes

_x, _y, _t = sym.symbols("x y t", real=True)


def _grad(vec):
    return sym.Matrix([[sym.diff(vec[i], s) for s in (_x, _y)] for i in range(2)])


def _div_tensor(T):
    return sym.Matrix([sum(sym.diff(T[i, j], s) for j, s in enumerate((_x, _y))) for i in range(2)])


def _lambdify_vec(vec):
    fns = [sym.lambdify((_x, _y, _t), vec[i], "numpy") for i in range(2)]

    def call(pts, t):
        pts = np.asarray(pts, dtype=float)
        out = np.stack(
            [np.broadcast_to(f(pts[..., 0], pts[..., 1], t), pts.shape[:-1]) for f in fns],
            axis=-1,
        )
        return out

    return call


def _lambdify_mat(T):
    fns = [[sym.lambdify((_x, _y, _t), T[i, j], "numpy") for j in range(2)] for i in range(2)]

    def call(pts, t):
        pts = np.asarray(pts, dtype=float)
        rows = [
            np.stack(
                [np.broadcast_to(f(pts[..., 0], pts[..., 1], t), pts.shape[:-1]) for f in row],
                axis=-1,
            )
            for row in fns
        ]
        return np.stack(rows, axis=-2)

    return call


def _lambdify_scalar(s):
    f = sym.lambdify((_x, _y, _t), s, "numpy")

    def call(pts, t):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(f(pts[..., 0], pts[..., 1], t), pts.shape[:-1]).astype(float)

    return call


def elastic_manufactured(mat, omega=1.0, amplitude=0.1):
    """u*(X, t) = sin(omega t) phi(X) with the matching body force.

    Returns dict with callables u, u_t, body_force, piola (stress matrix).
    """
    phi = sym.Matrix(
        [
            amplitude * sym.sin(_x) * sym.cos(_y),
            amplitude * sym.cos(_x + _y / 2),
        ]
    )
    u = sym.sin(omega * _t) * phi
    G = _grad(u)
    E = (G + G.T) / 2
    P = mat.lam * E.trace() * sym.eye(2) + 2 * mat.mu_hat * E
    u_tt = sym.diff(u, _t, 2)
    F1 = mat.rho_solid * u_tt - _div_tensor(P)
    return {
        "u": _lambdify_vec(u),
        "u_t": _lambdify_vec(sym.diff(u, _t)),
        "body_force": _lambdify_vec(F1),
        "piola": _lambdify_mat(P),
    }


def stokes_manufactured(mat, omega=1.0, amplitude=0.1, grad_part=0.3):
    """(v*, p*) = smooth curl-based velocity plus a gradient part, smooth pressure.

    g := div v*, f := rho dv*/dt - div T(v*, p*), d := T(v*, p*) n.
    Returns callables v, v_t, p, g, f, stress.
    """
    psi = amplitude * sym.sin(_x) * sym.sin(_y) * (1 + _t / 2)
    eta = amplitude * grad_part * sym.cos(_x + _y) * sym.sin(omega * _t)
    v = sym.Matrix([sym.diff(psi, _y), -sym.diff(psi, _x)]) + sym.Matrix(
        [sym.diff(eta, _x), sym.diff(eta, _y)]
    )
    p = amplitude * sym.cos(omega * _t) * (_x**2 - _y) + amplitude
    G = _grad(v)
    D = (G + G.T) / 2
    T = -p * sym.eye(2) + 2 * mat.mu * D
    g = G.trace()
    f = mat.rho_fluid * sym.diff(v, _t) - _div_tensor(T)
    return {
        "v": _lambdify_vec(v),
        "v_t": _lambdify_vec(sym.diff(v, _t)),
        "p": _lambdify_scalar(p),
        "g": _lambdify_scalar(g),
        "g_t": _lambdify_scalar(sym.diff(g, _t)),
        "f": _lambdify_vec(f),
        "stress": _lambdify_mat(T),
    }


def _interp_traj(space, rank, fn, times):
    vals = np.array([fn(space.dof_coords, t) for t in times])
    return Trajectory(space, rank, vals, times[0], times[1] - times[0])


def run_elastic_mms(mat, geometry, T, dt, fields=None):
    """Solve the solid problem against a manufactured solution.

    Returns (L2 displacement error at final time, solution, space).
    """
    fields = fields or elastic_manufactured(mat)
    mesh = build_reference_mesh(geometry)
    space = FunctionSpace(mesh, SOLID, 2)
    bL = BoundarySpace(mesh, GAMMA_L, 2, side=SOLID)
    nt = int(round(T / dt)) + 1
    times = np.arange(nt) * dt

    u0 = FieldSnapshot(space, "vector", fields["u"](space.dof_coords, 0.0), 0.0)
    u1 = FieldSnapshot(space, "vector", fields["u_t"](space.dof_coords, 0.0), 0.0)
    w = _interp_traj(bL, "vector", fields["u_t"], times)
    body = _interp_traj(space, "vector", fields["body_force"], times)
    problem = ElasticProblem(
        mesh, mat, u0, u1, w, body_force=body, T=T, dt=dt,
        gamma_B_traction=fields["piola"],
    )
    sol = solve_elastic(problem, ElasticOperator(mesh, mat, dt, space=space))
    exact = fields["u"](space.dof_coords, times[-1])
    err = ops.norm_L2(space, sol.u.values[-1] - exact)
    return err, sol, space


def run_stokes_mms(mat, geometry, T, dt, fields=None):
    """Solve the fluid problem against a manufactured solution.

    Returns (L2 velocity error, L2 pressure error at final time, solution).
    """
    fields = fields or stokes_manufactured(mat)
    mesh = build_reference_mesh(geometry)
    space = FunctionSpace(mesh, FLUID, 2)
    pspace = FunctionSpace(mesh, FLUID, 1)
    nt = int(round(T / dt)) + 1
    times = np.arange(nt) * dt

    v0 = FieldSnapshot(space, "vector", fields["v"](space.dof_coords, 0.0), 0.0)
    g = _interp_traj(pspace, "scalar", fields["g"], times)
    f = _interp_traj(space, "vector", fields["f"], times)
    problem = StokesProblem(
        mesh, mat, v0, g=g, f=f, d=fields["stress"], T=T, dt=dt, compat_tol=1.0,
    )
    sol = solve_stokes(problem)
    v_exact = fields["v"](space.dof_coords, times[-1])
    p_exact = fields["p"](pspace.dof_coords, times[-1])
    err_v = ops.norm_L2(space, sol.v.values[-1] - v_exact)
    err_p = ops.norm_L2(pspace, sol.p.values[-1] - p_exact)
    return err_v, err_p, sol


def fit_order(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def convergence_study(kind, mat=None, geometry=None, levels=3, h0=0.5, dt0=0.1, T=0.4):
    """Convergence table under simultaneous (h, dt) halving.

    Returns a list of row dicts (h, dt, errors) plus fitted orders.
    """
    mat = mat or MaterialParams()
    r_inner = geometry.r_inner if geometry else 1.0
    r_outer = geometry.r_outer if geometry else 2.0
    rows = []
    for lev in range(levels):
        h = h0 / 2**lev
        dt = dt0 / 2**lev
        geo = GeometrySpec("disk-annulus", r_inner, r_outer, h)
        if kind == "elastic":
            err, _, _ = run_elastic_mms(mat, geo, T, dt)
            rows.append({"h": h, "dt": dt, "err_u": err})
        elif kind == "stokes":
            err_v, err_p, _ = run_stokes_mms(mat, geo, T, dt)
            rows.append({"h": h, "dt": dt, "err_v": err_v, "err_p": err_p})
        else:
            raise ValueError(kind)
    hs = [r["h"] for r in rows]
    orders = {}
    for key in rows[0]:
        if key.startswith("err"):
            orders["order_" + key[4:]] = fit_order(hs, [r[key] for r in rows])
    return rows, orders
