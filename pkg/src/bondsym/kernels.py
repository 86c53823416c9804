"""Tridiagonal kernels: the compiled extension when it is built, else pure Python.

Set ``BONDSYM_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("BONDSYM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    return _impl.solve_tridiagonal(_f64(lower), _f64(diag), _f64(upper), _f64(rhs))


def tridiag_matvec(lower, diag, upper, v) -> np.ndarray:
    return _impl.tridiag_matvec(_f64(lower), _f64(diag), _f64(upper), _f64(v))


def backends():
    """Available implementations keyed by name (for tests and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
        out["cython"] = _compiled
    except ImportError:
        pass
    return out
