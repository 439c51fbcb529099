"""Tridiagonal kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it imports; set the environment
variable ``DAMPWAVE_KERNELS=python`` to force the fallback.

Functions
---------
tridiag_factor, tridiag_solve
    LU with partial pivoting of a complex tridiagonal matrix, and solves
    with ``T`` or ``T^H``.
tridiag_inverse_norm
    ``||T^{-1}||_2`` by Lanczos on ``T^{-H} T^{-1}``.
shifted_inverse_norms
    The same for a batch of diagonal shifts ``T + s I``.
"""

import os

from . import _tridiag_py as python_backend

BACKEND = "python"
compiled_backend = None
if os.environ.get("DAMPWAVE_KERNELS", "").lower() != "python":
    try:
        from . import _tridiag as compiled_backend
        BACKEND = "compiled"
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if BACKEND == "compiled" else python_backend

tridiag_factor = _impl.tridiag_factor
tridiag_solve = _impl.tridiag_solve
tridiag_inverse_norm = _impl.tridiag_inverse_norm
shifted_inverse_norms = _impl.shifted_inverse_norms
