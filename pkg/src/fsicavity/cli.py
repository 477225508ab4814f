"""Command-line runner: simulate / verify / mms / compat / dependence / inequalities.

Every subcommand takes a single config-file path; outputs (CSV, optional VTK,
manifest) land in the configured output directory. Exit codes: 0 success,
1 usage or config error, 2 compatibility failure, 3 non-convergence,
4 degenerate deformation.
"""

import argparse
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPAT = 2
EXIT_NONCONV = 3
EXIT_DEGENERATE = 4


def _load_data(cfg, mesh, cws):
    from .compat import InitialData, generate_compatible_data
    from .fields import FieldSnapshot

    if cfg.data_file:
        blob = np.load(cfg.data_file)
        data = InitialData(
            FieldSnapshot(cws.solid, "vector", blob["u0"]),
            FieldSnapshot(cws.solid, "vector", blob["u1"]),
            FieldSnapshot(cws.fluid, "vector", blob["v0"]),
        )
        from .compat import construct_derived

        derived = construct_derived(data, mesh, cfg.material, ws=cws)
        return data, derived
    return generate_compatible_data(
        cfg.data_family, cfg.data_amplitude, mesh, cfg.material, ws=cws
    )


def cmd_simulate(cfg):
    from .compat import CompatWorkspace, check_compatibility
    from .diagnostics import energy_report
    from .errors import DegenerateDeformation, NonContraction, WindowCollapse
    from .fixedpoint import outer_fixed_point
    from .io_formats import vertex_field, write_csv, write_vtk
    from .meshing import build_reference_mesh

    mesh = build_reference_mesh(cfg.geometry)
    cws = CompatWorkspace(mesh, cfg.material)
    data, derived = _load_data(cfg, mesh, cws)
    report = check_compatibility(data, derived, mesh, cfg.material, cfg.fixed_point.compat_tol, ws=cws)
    # gate the run on the conditions the discrete solvers enforce outright;
    # the remaining residuals are reported by the compat subcommand
    bad = report.solver_gate(cfg.fixed_point.compat_tol)
    if bad:
        print(f"compatibility failure: conditions {bad}")
        return EXIT_COMPAT

    try:
        sol = outer_fixed_point(data, derived, mesh, cfg.material, cfg.fixed_point)
    except (WindowCollapse, NonContraction) as exc:
        print(f"non-convergence: {exc}")
        return EXIT_NONCONV
    except DegenerateDeformation as exc:
        print(f"degenerate deformation: {exc}")
        return EXIT_DEGENERATE

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    if cfg.write_csv:
        write_csv(
            os.path.join(out, "iterations.csv"),
            ["outer_k", "inner_k", "inner_increment", "ratio", "Jmin", "Jmax", "energy_residual"],
            sol.report.rows,
        )
        er = energy_report(sol.u, sol.fluid, cfg.material)
        rows = [
            {
                "t": er.times[n],
                "kinetic_fluid": er.kinetic_fluid[n],
                "kinetic_solid": er.kinetic_solid[n],
                "elastic_div": er.elastic_div[n],
                "elastic_strain": er.elastic_strain[n],
                "dissipation": er.dissipation[n],
                "balance_residual": er.balance_residual[n],
            }
            for n in range(len(er.times))
        ]
        write_csv(
            os.path.join(out, "energy.csv"),
            ["t", "kinetic_fluid", "kinetic_solid", "elastic_div", "elastic_strain",
             "dissipation", "balance_residual"],
            rows,
        )
    if cfg.write_vtk:
        fields = {
            "velocity": vertex_field(mesh, sol.fluid.v.space, sol.fluid.v.values[-1]),
            "pressure": vertex_field(mesh, sol.fluid.p.space, sol.fluid.p.values[-1]),
            "displacement": vertex_field(mesh, sol.u.u.space, sol.u.u.values[-1]),
        }
        write_vtk(os.path.join(out, "final_fields.vtk"), mesh, fields)
    from .config import write_manifest

    write_manifest(cfg, out)
    rep = sol.report
    print(
        f"converged: T={rep.accepted_T:g} outer_iters={len(rep.outer_increments)} "
        f"J_range=({rep.J_range[0]:.6f}, {rep.J_range[1]:.6f}) "
        f"interface_mismatch={rep.interface_mismatch:.3e}"
    )
    return EXIT_OK


def cmd_verify(cfg):
    from . import tensors
    from .materials import MaterialParams

    rng = np.random.default_rng(cfg.seed)
    mat = cfg.material
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    for d in (2, 3):
        F = rng.normal(size=(1000, d, d)) + 3.0 * np.eye(d)
        C = tensors.cofactor_field(F)
        J = tensors.det_field(F)
        ident = np.einsum("nij,nkj->nik", C, F) - J[:, None, None] * np.eye(d)
        scale = np.abs(J)[:, None, None]
        check(f"cofactor identity d={d}", float(np.abs(ident / scale).max()) < 1e-10)
        check(
            f"det(cof F) = det(F)^(d-1), d={d}",
            np.allclose(tensors.det_field(C), J ** (d - 1), rtol=1e-8),
        )
        G = rng.normal(size=(200, d, d))
        P = tensors.piola_stress(G, mat)
        check(f"piola stress symmetric d={d}", np.allclose(P, np.swapaxes(P, -1, -2)))
        p = rng.normal(size=200)
        T = tensors.cauchy_stress(G, p, mat)
        check(f"cauchy stress symmetric d={d}", np.allclose(T, np.swapaxes(T, -1, -2)))
        tr = np.trace(T, axis1=-2, axis2=-1)
        divv = np.trace(G, axis1=-2, axis2=-1)
        check(
            f"cauchy trace identity d={d}",
            np.allclose(tr, -d * p + 2.0 * mat.mu * divv),
        )
        Tt = tensors.transformed_stress(G, p, np.broadcast_to(np.eye(d), G.shape), mat)
        check(f"transformed stress reduces at cof=I d={d}", np.allclose(Tt, T))
        S1 = tensors.stress_mismatch(G, C[:200])
        S2 = tensors.stress_mismatch_direct(G, C[:200])
        check(f"stress mismatch factored form d={d}", np.allclose(S1, S2, atol=1e-12))
    return EXIT_OK if failures == 0 else EXIT_USAGE


def cmd_mms(cfg):
    from .io_formats import write_csv
    from .verification import convergence_study

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    m = cfg.mms
    rows_e, orders_e = convergence_study(
        "elastic", cfg.material, cfg.geometry, m["levels"], m["h0"], m["dt0"], m["T"]
    )
    rows_s, orders_s = convergence_study(
        "stokes", cfg.material, cfg.geometry, m["levels"], m["h0"], m["dt0"], m["T"]
    )
    rows = []
    for re_, rs in zip(rows_e, rows_s):
        rows.append(
            {
                "h": re_["h"],
                "dt": re_["dt"],
                "err_u": re_["err_u"],
                "err_v": rs["err_v"],
                "err_p": rs["err_p"],
                "order_u": orders_e["order_u"],
                "order_v": orders_s["order_v"],
                "order_p": orders_s["order_p"],
            }
        )
    write_csv(
        os.path.join(out, "convergence.csv"),
        ["h", "dt", "err_u", "err_v", "err_p", "order_u", "order_v", "order_p"],
        rows,
    )
    print(
        f"fitted orders: displacement {orders_e['order_u']:.2f}, "
        f"velocity {orders_s['order_v']:.2f}, pressure {orders_s['order_p']:.2f}"
    )
    return EXIT_OK


def cmd_compat(cfg):
    import json

    from .compat import CompatWorkspace, check_compatibility, flux_violating_fixture
    from .errors import FluxImbalance
    from .meshing import build_reference_mesh

    mesh = build_reference_mesh(cfg.geometry)
    cws = CompatWorkspace(mesh, cfg.material)
    try:
        if cfg.data_family == "flux-violating":
            data, derived = flux_violating_fixture(mesh, cfg.material, cfg.data_amplitude, ws=cws)
        else:
            data, derived = _load_data(cfg, mesh, cws)
    except FluxImbalance as exc:
        print(f"compatibility failure: condition (iv) flux balance: {exc}")
        return EXIT_COMPAT
    report = check_compatibility(
        data, derived, mesh, cfg.material, cfg.fixed_point.compat_tol, ws=cws
    )
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "compat_report.json"), "w") as f:
        json.dump(report.as_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    for key, value in sorted(report.as_dict().items()):
        print(f"{key} = {value}")
    if not report.all_pass:
        names = ", ".join(f"({c})" for c in report.failing_conditions())
        print(f"compatibility failure: conditions {names}")
        return EXIT_COMPAT
    return EXIT_OK


def cmd_dependence(cfg):
    from .compat import CompatWorkspace, construct_derived, generate_compatible_data
    from .diagnostics import dependence_experiment
    from .io_formats import write_csv
    from .meshing import build_reference_mesh

    mesh = build_reference_mesh(cfg.geometry)
    cws = CompatWorkspace(mesh, cfg.material)
    base_amp = cfg.data_amplitude
    eps0 = cfg.dependence["epsilon"]
    rows = []
    dataA, derivedA = generate_compatible_data(
        cfg.data_family, base_amp, mesh, cfg.material, ws=cws
    )
    for k in range(cfg.dependence["sweep"]):
        eps = eps0 / 2**k
        dataB, derivedB = generate_compatible_data(
            cfg.data_family, base_amp + eps, mesh, cfg.material, ws=cws
        )
        ratio, solA, solB = dependence_experiment(
            dataA, derivedA, dataB, derivedB, mesh, cfg.material, cfg.fixed_point
        )
        rows.append({"epsilon": eps, "ratio": ratio})
        print(f"epsilon = {eps:.3e}  ratio = {ratio:.6g}")
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "dependence.csv"), ["epsilon", "ratio"], rows)
    return EXIT_OK


def cmd_inequalities(cfg):
    from .inequalities import LEMMAS, inequality_harness
    from .io_formats import write_csv

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    rows = []
    for lemma in LEMMAS:
        res = inequality_harness(
            lemma, cfg.inequalities["samples"], cfg.inequalities["T_grid"], seed=cfg.seed
        )
        for T, ratio in res.per_T:
            rows.append(
                {
                    "lemma": lemma,
                    "params": ";".join(f"{k}={v}" for k, v in sorted(res.params.items())),
                    "T": T,
                    "max_ratio": ratio,
                    "fitted_exponent": res.fitted_exponent if res.fitted_exponent is not None else "",
                    "seed": res.seed,
                }
            )
        extra = f" fitted_exponent={res.fitted_exponent:.3f}" if res.fitted_exponent else ""
        print(f"{lemma}: max ratio {res.max_ratio:.3f}{extra}")
    write_csv(
        os.path.join(out, "inequalities.csv"),
        ["lemma", "params", "T", "max_ratio", "fitted_exponent", "seed"],
        rows,
    )
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "mms": cmd_mms,
    "compat": cmd_compat,
    "dependence": cmd_dependence,
    "inequalities": cmd_inequalities,
}


def run(subcommand, config_path):
    """Programmatic entry point; returns the process exit code."""
    from .config import ConfigError, parse_config

    if subcommand not in COMMANDS:
        print(f"unknown subcommand {subcommand!r}")
        return EXIT_USAGE
    try:
        cfg = parse_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return EXIT_USAGE
    return COMMANDS[subcommand](cfg)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fsicavity",
        description="Fluid-filled elastic solid: partitioned Lagrangian solver",
    )
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("config", help="path to the run configuration file")
    args = parser.parse_args(argv)
    return run(args.subcommand, args.config)


if __name__ == "__main__":
    sys.exit(main())
