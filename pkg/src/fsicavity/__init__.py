"""Partitioned Lagrangian solver for a fluid-filled elastic solid.

A viscous incompressible fluid fills the cavity of a linearly elastic shell;
the coupled motion is computed by nested fixed-point iterations over frozen
deformation states, with elastic and Stokes sub-solvers exchanging interface
data, plus verification instruments for the kinematic identities, the
compatibility conditions, the energy balance and the supporting space-time
norm inequalities.
"""

__version__ = "0.1.0"

from .materials import MaterialParams
from .meshing import FLUID, GAMMA_B, GAMMA_L, SOLID, GeometrySpec, build_reference_mesh

__all__ = [
    "MaterialParams",
    "GeometrySpec",
    "build_reference_mesh",
    "SOLID",
    "FLUID",
    "GAMMA_B",
    "GAMMA_L",
    "__version__",
]
