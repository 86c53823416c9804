# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels used by the finite-difference solver."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def solve_tridiagonal(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] rhs):
    """Thomas algorithm; lower[0] and upper[n-1] are ignored."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m
    if lower.shape[0] != n or upper.shape[0] != n or rhs.shape[0] != n:
        raise ValueError("all bands and the right-hand side need the same length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] x = out
    cdef double[::1] c = np.empty(n, dtype=np.float64)
    if diag[0] == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve at row 0")
    c[0] = upper[0] / diag[0]
    x[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * c[i - 1]
        if m == 0.0:
            raise ZeroDivisionError(f"zero pivot in tridiagonal solve at row {i}")
        c[i] = upper[i] / m if i < n - 1 else 0.0
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return out


def tridiag_matvec(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] v):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    if lower.shape[0] != n or upper.shape[0] != n or v.shape[0] != n:
        raise ValueError("all bands and the vector need the same length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    for i in range(n):
        y[i] = diag[i] * v[i]
        if i > 0:
            y[i] += lower[i] * v[i - 1]
        if i < n - 1:
            y[i] += upper[i] * v[i + 1]
    return out
