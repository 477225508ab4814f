"""Pointwise continuum kinematics and constitutive laws.

Single-point operations on d x d tensors (d in {2, 3}) plus their batched
variants over stacks of points. Everything here is a pure function of its
arguments; field-level wrappers live in deformation.py.
"""

import numpy as np

from . import kernels
from .errors import SingularMatrixError


def cofactor(F):
    """Cofactor tensor det(F) F^{-T} of an invertible d x d matrix.

    Computed entrywise from minors (adjugate transpose), which is stable for
    small determinants; raises SingularMatrixError when det(F) == 0.
    """
    F = np.asarray(F, dtype=float)
    C = kernels.batch_cofactor(F[None, :, :])[0]
    if det(F) == 0.0:
        raise SingularMatrixError("cofactor of a singular matrix requested")
    return C


def det(F):
    """Determinant of a single d x d matrix."""
    F = np.asarray(F, dtype=float)
    return kernels.batch_det(F[None, :, :])[0]


def cofactor_field(F):
    """Cofactors of a stack of matrices (..., d, d); no invertibility check."""
    F = np.asarray(F, dtype=float)
    lead = F.shape[:-2]
    C = kernels.batch_cofactor(F.reshape(-1, *F.shape[-2:]))
    return C.reshape(*lead, *F.shape[-2:])


def det_field(F):
    """Determinants of a stack of matrices (..., d, d) -> (...)."""
    F = np.asarray(F, dtype=float)
    lead = F.shape[:-2]
    return kernels.batch_det(F.reshape(-1, *F.shape[-2:])).reshape(lead)


def symmetric_part(G):
    """Symmetrization (G + G^T)/2; strain of a displacement gradient, rate of
    deformation of a velocity gradient."""
    G = np.asarray(G, dtype=float)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def piola_stress(grad_u, mat):
    """Linear-elastic stress lam tr(E) I + 2 mu_hat E, E = sym(grad_u).

    Works on a single gradient (d, d) or a stack (..., d, d).
    """
    grad_u = np.asarray(grad_u, dtype=float)
    d = grad_u.shape[-1]
    E = symmetric_part(grad_u)
    tr = np.trace(E, axis1=-2, axis2=-1)
    I = np.eye(d)
    return mat.lam * tr[..., None, None] * I + 2.0 * mat.mu_hat * E


def cauchy_stress(grad_v, p, mat):
    """Newtonian fluid stress -p I + 2 mu D, D = sym(grad_v).

    p may be a scalar or an array broadcastable over the stack axes.
    """
    grad_v = np.asarray(grad_v, dtype=float)
    d = grad_v.shape[-1]
    D = symmetric_part(grad_v)
    I = np.eye(d)
    p = np.asarray(p, dtype=float)
    return -p[..., None, None] * I + 2.0 * mat.mu * D


def transformed_stress(grad_v, p, cof, mat):
    """Pulled-back fluid stress on the reference configuration.

    -p cof + mu grad_v cof^T cof + mu cof grad_v^T cof, where cof is the
    cofactor of the deformation gradient. Reduces to cauchy_stress when
    cof = I. Accepts single tensors or matching stacks.
    """
    grad_v = np.asarray(grad_v, dtype=float)
    cof = np.asarray(cof, dtype=float)
    p = np.asarray(p, dtype=float)
    cofT = np.swapaxes(cof, -1, -2)
    gradT = np.swapaxes(grad_v, -1, -2)
    return (
        -p[..., None, None] * cof
        + mat.mu * grad_v @ cofT @ cof
        + mat.mu * cof @ gradT @ cof
    )


def stress_mismatch(grad_v, cof):
    """Viscous-stress mismatch 2 D(v) - grad_v cof^T cof - cof grad_v^T cof.

    Evaluated in the factored form built from products against (I - cof):
        S = G (I - cof^T) + [G (I - cof^T)]^T
            + G cof^T (I - cof) + (G cof^T)^T (I - cof),  G = grad_v,
    so that S vanishes identically when cof = I without cancellation error.
    """
    G = np.asarray(grad_v, dtype=float)
    cof = np.asarray(cof, dtype=float)
    d = G.shape[-1]
    I = np.eye(d)
    cofT = np.swapaxes(cof, -1, -2)
    A = G @ (I - cofT)
    B = (G @ cofT) @ (I - cof)
    BT_factor = np.swapaxes(G @ cofT, -1, -2) @ (I - cof)
    return A + np.swapaxes(A, -1, -2) + B + BT_factor


def stress_mismatch_direct(grad_v, cof):
    """Unfactored definition of the viscous mismatch, for cross-checking."""
    G = np.asarray(grad_v, dtype=float)
    cof = np.asarray(cof, dtype=float)
    cofT = np.swapaxes(cof, -1, -2)
    GT = np.swapaxes(G, -1, -2)
    return 2.0 * symmetric_part(G) - G @ cofT @ cof - cof @ GT @ cof
