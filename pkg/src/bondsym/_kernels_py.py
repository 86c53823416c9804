"""Pure-Python tridiagonal kernels with the same contract as the compiled ones."""
from __future__ import annotations

import numpy as np


def _check(*arrays):
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("all bands and the right-hand side need the same length")
    return n


def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm; lower[0] and upper[n-1] are ignored."""
    n = _check(diag, lower, upper, rhs)
    lo, di, up, r = (np.asarray(a, dtype=float).tolist() for a in (lower, diag, upper, rhs))
    c = [0.0] * n
    x = [0.0] * n
    if di[0] == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve at row 0")
    c[0] = up[0] / di[0]
    x[0] = r[0] / di[0]
    for i in range(1, n):
        m = di[i] - lo[i] * c[i - 1]
        if m == 0.0:
            raise ZeroDivisionError(f"zero pivot in tridiagonal solve at row {i}")
        c[i] = up[i] / m if i < n - 1 else 0.0
        x[i] = (r[i] - lo[i] * x[i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return np.array(x)


def tridiag_matvec(lower, diag, upper, v):
    n = _check(diag, lower, upper, v)
    lo, di, up, w = (np.asarray(a, dtype=float).tolist() for a in (lower, diag, upper, v))
    y = [0.0] * n
    for i in range(n):
        s = di[i] * w[i]
        if i > 0:
            s += lo[i] * w[i - 1]
        if i < n - 1:
            s += up[i] * w[i + 1]
        y[i] = s
    return np.array(y)
