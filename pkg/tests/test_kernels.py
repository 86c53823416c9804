import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import solve_banded

from bondsym import kernels
from bondsym.kernels import backends


def test_backend_selected():
    assert kernels.BACKEND in backends()


@pytest.fixture(params=sorted(backends()))
def impl(request):
    return backends()[request.param]


def system(n, seed):
    rng = np.random.default_rng(seed)
    lo, up = rng.normal(size=n), rng.normal(size=n)
    di = np.abs(lo) + np.abs(up) + rng.uniform(0.5, 2.0, n)
    return lo, di, up, rng.normal(size=n)


def banded(lo, di, up):
    ab = np.zeros((3, lo.size))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    return ab


@given(st.integers(1, 60), st.integers(0, 10_000))
def test_solve_matches_scipy(n, seed):
    lo, di, up, r = system(n, seed)
    want = solve_banded((1, 1), banded(lo, di, up), r)
    for impl in backends().values():
        got = impl.solve_tridiagonal(lo, di, up, r)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 60), st.integers(0, 10_000))
def test_matvec_inverts_solve(n, seed):
    lo, di, up, r = system(n, seed)
    for impl in backends().values():
        x = impl.solve_tridiagonal(lo, di, up, r)
        np.testing.assert_allclose(impl.tridiag_matvec(lo, di, up, x), r, rtol=1e-11, atol=1e-11)


@given(arrays(np.float64, 7, elements=st.floats(-5, 5)))
def test_matvec_backends_agree(v):
    lo, di, up, _ = system(7, 1)
    outs = [impl.tridiag_matvec(lo, di, up, v) for impl in backends().values()]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], rtol=1e-14, atol=1e-14)


def test_ignored_corners(impl):
    lo, di, up, r = system(5, 3)
    a = impl.solve_tridiagonal(lo, di, up, r)
    lo2, up2 = lo.copy(), up.copy()
    lo2[0], up2[-1] = 1e9, -1e9
    np.testing.assert_array_equal(impl.solve_tridiagonal(lo2, di, up2, r), a)


def test_zero_pivot(impl):
    with pytest.raises(ZeroDivisionError):
        impl.solve_tridiagonal(np.zeros(3), np.array([0.0, 1.0, 1.0]), np.zeros(3), np.ones(3))


def test_length_mismatch(impl):
    with pytest.raises(ValueError):
        impl.solve_tridiagonal(np.zeros(3), np.ones(4), np.zeros(3), np.ones(3))
