"""Pure-numpy implementations of the hot kernels.

Same call signatures as the compiled backend; used as the fallback when the
extension module is unavailable (and for cross-checking in tests).
"""

import numpy as np


def batch_det(F):
    """Determinants of a stack of d x d matrices, shape (n, d, d) -> (n,)."""
    F = np.asarray(F, dtype=float)
    d = F.shape[-1]
    if d == 2:
        return F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    if d == 3:
        return (
            F[:, 0, 0] * (F[:, 1, 1] * F[:, 2, 2] - F[:, 1, 2] * F[:, 2, 1])
            - F[:, 0, 1] * (F[:, 1, 0] * F[:, 2, 2] - F[:, 1, 2] * F[:, 2, 0])
            + F[:, 0, 2] * (F[:, 1, 0] * F[:, 2, 1] - F[:, 1, 1] * F[:, 2, 0])
        )
    raise ValueError("only d in {2, 3} supported")


def batch_cofactor(F):
    """Cofactor tensors det(F) F^{-T} of a stack (n, d, d), entrywise minors.

    Computed from 2x2 minors (adjugate transpose), never through an explicit
    inverse, so the result stays finite for any input including singular F.
    """
    F = np.asarray(F, dtype=float)
    d = F.shape[-1]
    C = np.empty_like(F)
    if d == 2:
        C[:, 0, 0] = F[:, 1, 1]
        C[:, 0, 1] = -F[:, 1, 0]
        C[:, 1, 0] = -F[:, 0, 1]
        C[:, 1, 1] = F[:, 0, 0]
        return C
    if d == 3:
        C[:, 0, 0] = F[:, 1, 1] * F[:, 2, 2] - F[:, 1, 2] * F[:, 2, 1]
        C[:, 0, 1] = F[:, 1, 2] * F[:, 2, 0] - F[:, 1, 0] * F[:, 2, 2]
        C[:, 0, 2] = F[:, 1, 0] * F[:, 2, 1] - F[:, 1, 1] * F[:, 2, 0]
        C[:, 1, 0] = F[:, 0, 2] * F[:, 2, 1] - F[:, 0, 1] * F[:, 2, 2]
        C[:, 1, 1] = F[:, 0, 0] * F[:, 2, 2] - F[:, 0, 2] * F[:, 2, 0]
        C[:, 1, 2] = F[:, 0, 1] * F[:, 2, 0] - F[:, 0, 0] * F[:, 2, 1]
        C[:, 2, 0] = F[:, 0, 1] * F[:, 1, 2] - F[:, 0, 2] * F[:, 1, 1]
        C[:, 2, 1] = F[:, 0, 2] * F[:, 1, 0] - F[:, 0, 0] * F[:, 1, 2]
        C[:, 2, 2] = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
        return C
    raise ValueError("only d in {2, 3} supported")


def scatter_add(out, rows, values):
    """out[rows] += values with in-order (deterministic) accumulation.

    rows and values may have any matching shape; duplicates accumulate in
    flat iteration order.
    """
    np.add.at(out, rows.ravel(), values.ravel())
    return out
