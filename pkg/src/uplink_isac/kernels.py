"""Backend selection for the projected-gradient inner loop.

The compiled extension is used when it imports; otherwise the NumPy
implementation is. Set ``UPLINK_ISAC_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from . import _pg_py

try:
    from . import _pg_kernel
except ImportError:  # extension not built
    _pg_kernel = None

_FORCED = os.environ.get("UPLINK_ISAC_BACKEND", "").lower()
BACKEND = "compiled" if (_pg_kernel is not None and _FORCED != "python") else "python"


def _as_f64(m):
    return np.ascontiguousarray(m, dtype=complex).view(np.float64)


def pg_inner(A, Q, B, X, Xprev, mu, beta, k_max, lo, hi, accel=True, tol=1e-8,
             history=None, backend=None):
    """Dispatch to the selected backend; ``X`` and ``Xprev`` are updated in place.

    ``X``/``Xprev`` must be C-contiguous complex128. Requesting ``history``
    always uses the NumPy path.
    """
    backend = backend or BACKEND
    if backend == "compiled" and history is None:
        if _pg_kernel is None:
            raise RuntimeError("compiled backend is not available")
        if not (X.flags.c_contiguous and Xprev.flags.c_contiguous):
            raise ValueError("X and Xprev must be C-contiguous")
        return _pg_kernel.pg_inner(_as_f64(A), _as_f64(Q), _as_f64(B),
                                   X.view(np.float64), Xprev.view(np.float64),
                                   float(mu), float(beta), int(k_max),
                                   float(lo), float(hi), bool(accel), float(tol))
    return _pg_py.pg_inner(A, Q, B, X, Xprev, mu, beta, k_max, lo, hi, accel, tol,
                           history=history)
