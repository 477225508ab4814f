"""Run configuration: flat-sectioned key = value text files.

Sections and keys (defaults in parentheses):

    [geometry]    family (disk-annulus), r_inner (1.0), r_outer (2.0), h (0.25)
    [material]    rho_solid, rho_fluid, lam, mu_hat, mu (all 1.0)
    [time]        T (0.5), dt (0.025)
    [fixed_point] tol_inner (1e-8), tol_outer (1e-6), max_inner (40),
                  max_outer (25), shrink_factor (0.5), compat_tol (1e-6)
    [data]        family (zero), amplitude (1e-2), file (optional .npz with
                  u0/u1/v0 arrays, overrides the family)
    [output]      directory (out), vtk (false), csv (true),
                  iteration_dumps (false)
    [run]         seed (0), deterministic (true)
    [mms]         levels (3), h0 (0.5), dt0 (0.1), T (0.4)
    [dependence]  epsilon (1e-3), sweep (3)
    [inequalities] samples (100), T_grid (0.25 0.5 1.0)

Reproducibility lives in the file: the CLI takes no tuning flags beyond the
subcommand and the config path.
"""

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field

from .fixedpoint import FixedPointConfig
from .materials import MaterialParams
from .meshing import GeometrySpec


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: GeometrySpec
    material: MaterialParams
    fixed_point: FixedPointConfig
    data_family: str = "zero"
    data_amplitude: float = 1e-2
    data_file: str = ""
    output_dir: str = "out"
    write_vtk: bool = False
    write_csv: bool = True
    iteration_dumps: bool = False
    seed: int = 0
    deterministic: bool = True
    mms: dict = field(default_factory=dict)
    dependence: dict = field(default_factory=dict)
    inequalities: dict = field(default_factory=dict)
    config_hash: str = ""


def _get(cp, section, key, cast, default):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc
    return default


def parse_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    with open(path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()

    try:
        geometry = GeometrySpec(
            family=_get(cp, "geometry", "family", str, "disk-annulus"),
            r_inner=_get(cp, "geometry", "r_inner", float, 1.0),
            r_outer=_get(cp, "geometry", "r_outer", float, 2.0),
            h=_get(cp, "geometry", "h", float, 0.25),
        )
        material = MaterialParams(
            rho_solid=_get(cp, "material", "rho_solid", float, 1.0),
            rho_fluid=_get(cp, "material", "rho_fluid", float, 1.0),
            lam=_get(cp, "material", "lam", float, 1.0),
            mu_hat=_get(cp, "material", "mu_hat", float, 1.0),
            mu=_get(cp, "material", "mu", float, 1.0),
        )
        fixed_point = FixedPointConfig(
            T=_get(cp, "time", "T", float, 0.5),
            dt=_get(cp, "time", "dt", float, 0.025),
            tol_inner=_get(cp, "fixed_point", "tol_inner", float, 1e-8),
            tol_outer=_get(cp, "fixed_point", "tol_outer", float, 1e-6),
            max_inner=_get(cp, "fixed_point", "max_inner", int, 40),
            max_outer=_get(cp, "fixed_point", "max_outer", int, 25),
            shrink_factor=_get(cp, "fixed_point", "shrink_factor", float, 0.5),
            compat_tol=_get(cp, "fixed_point", "compat_tol", float, 1e-6),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    data_file = _get(cp, "data", "file", str, "")
    if data_file and not os.path.exists(data_file):
        raise ConfigError(f"data file not found: {data_file}")

    cfg = RunConfig(
        geometry=geometry,
        material=material,
        fixed_point=fixed_point,
        data_family=_get(cp, "data", "family", str, "zero"),
        data_amplitude=_get(cp, "data", "amplitude", float, 1e-2),
        data_file=data_file,
        output_dir=_get(cp, "output", "directory", str, "out"),
        write_vtk=_get(cp, "output", "vtk", bool, False),
        write_csv=_get(cp, "output", "csv", bool, True),
        iteration_dumps=_get(cp, "output", "iteration_dumps", bool, False),
        seed=_get(cp, "run", "seed", int, 0),
        deterministic=_get(cp, "run", "deterministic", bool, True),
        mms={
            "levels": _get(cp, "mms", "levels", int, 3),
            "h0": _get(cp, "mms", "h0", float, 0.5),
            "dt0": _get(cp, "mms", "dt0", float, 0.1),
            "T": _get(cp, "mms", "T", float, 0.4),
        },
        dependence={
            "epsilon": _get(cp, "dependence", "epsilon", float, 1e-3),
            "sweep": _get(cp, "dependence", "sweep", int, 3),
        },
        inequalities={
            "samples": _get(cp, "inequalities", "samples", int, 100),
            "T_grid": [
                float(x)
                for x in _get(cp, "inequalities", "t_grid", str, "0.25 0.5 1.0").split()
            ],
        },
        config_hash=digest,
    )
    return cfg


def write_manifest(cfg, out_dir):
    from . import __version__

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "config_hash": cfg.config_hash,
        "code_version": __version__,
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
