"""Hot-kernel backend selection.

The compiled Cython module is preferred; the numpy fallback is selected when
the extension is missing or when FSICAVITY_PURE_PYTHON=1 is set. Both
backends produce identical results (same accumulation order), so a given
install is deterministic regardless of which one is active.
"""

import os

from . import _numpy_backend

if os.environ.get("FSICAVITY_PURE_PYTHON") == "1":
    _backend = _numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _compiled as _backend

        BACKEND = "compiled"
    except ImportError:
        _backend = _numpy_backend
        BACKEND = "numpy"

batch_det = _backend.batch_det
batch_cofactor = _backend.batch_cofactor
scatter_add = _backend.scatter_add
