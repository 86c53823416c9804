"""Tridiagonal solve timings: compiled kernel, pure-Python fallback and scipy.

    python3 benchmarks/bench_kernels.py [--sizes 50,200,1000] [--repeat 5]

The last table times a full 200 x 200 backward solve with each kernel, which
is the workload the pricer actually runs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np
from scipy.linalg import solve_banded

from bondsym import fdsolver, kernels
from bondsym.kernels import backends
from bondsym.solutions import get_case


def system(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    lo, up = rng.normal(size=n), rng.normal(size=n)
    di = np.abs(lo) + np.abs(up) + 1.0
    return lo, di, up, rng.normal(size=n)


def scipy_solve(lo, di, up, r):
    ab = np.zeros((3, di.size))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    return solve_banded((1, 1), ab, r)


def contiguous(fn):
    return lambda *a: fn(*(np.ascontiguousarray(x, dtype=np.float64) for x in a))


def best(fn, repeat: int) -> float:
    t = timeit.Timer(fn)
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,200,1000,5000")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    impls = {name: mod.solve_tridiagonal for name, mod in backends().items()}
    impls["scipy"] = scipy_solve
    names = list(impls)
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'n':>6} " + " ".join(f"{n + ' [us]':>14}" for n in names) + "   speedup vs python")
    for n in sizes:
        args_ = system(n)
        ref = impls["python"](*args_)
        times = {}
        for name, fn in impls.items():
            assert np.allclose(fn(*args_), ref, rtol=1e-10, atol=1e-12), name
            times[name] = best(lambda: fn(*args_), args.repeat)
        speed = " ".join(f"{k}={times['python'] / v:.1f}x" for k, v in times.items() if k != "python")
        print(f"{n:>6} " + " ".join(f"{times[k] * 1e6:>14.2f}" for k in names) + f"   {speed}")

    c = get_case("T-GammaHalf")
    grid = fdsolver.make_grid(c.params, (0.25, 4.0), (0.5, 1.0), 200, 200)
    print("\nfull 200x200 solve")
    for name, mod in backends().items():
        fdsolver.solve_tridiagonal = contiguous(mod.solve_tridiagonal)
        fdsolver.tridiag_matvec = contiguous(mod.tridiag_matvec)
        t = best(lambda: fdsolver.solve_terminal(c.problem, grid, c.solution), 3)
        print(f"  {name:<8} {t * 1e3:8.1f} ms")
    fdsolver.solve_tridiagonal = kernels.solve_tridiagonal
    fdsolver.tridiag_matvec = kernels.tridiag_matvec


if __name__ == "__main__":
    main()
