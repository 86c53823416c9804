"""Numerical checks: PDE residual sweeps, boundary conditions, round trips and
one-parameter group flows that should map solutions to solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from . import expr as ex
from .expr import Expr
from .grid import Grid, Surface, stencil_weights
from .model import EquationKind, PdeProblem, diffusion, drift
from .solutions import (AMBIGUOUS, ORIGINAL, TRANSFORMED, BarrierSpec, Generator, Region)
from .transforms import Transform

__all__ = [
    "ResidualReport", "FlowError", "FrameError", "sample_region", "pde_residual_sweep",
    "terminal_check", "barrier_check", "roundtrip_check", "log_collinearity",
    "flow_map", "surface_residual", "solution_to_solution_check",
    "boundary_invariance_check", "push_generator", "Generator",
]


class FlowError(RuntimeError):
    pass


class FrameError(ValueError):
    pass


@dataclass
class ResidualReport:
    check: str
    case_id: str
    n_samples: int
    max_abs_residual: float
    tol: float
    argmax_point: tuple | None = None
    excluded_loci: str = "none"
    detail: dict = field(default_factory=dict)
    # "below" for ordinary checks; "above" for negative controls that must fail.
    expect: str = "below"

    @property
    def passed(self) -> bool:
        if self.expect == "above":
            return bool(self.max_abs_residual > self.tol)
        return bool(np.isfinite(self.max_abs_residual) and self.max_abs_residual < self.tol)

    def record(self) -> dict:
        return {"check": self.check, "case": self.case_id, "n": int(self.n_samples),
                "max": float(self.max_abs_residual), "tol": float(self.tol), "pass": self.passed}

    def with_tol(self, tol: float) -> "ResidualReport":
        return ResidualReport(self.check, self.case_id, self.n_samples, self.max_abs_residual, tol,
                              self.argmax_point, self.excluded_loci, dict(self.detail), self.expect)

    def as_negative_control(self) -> "ResidualReport":
        return ResidualReport(self.check + "-negative", self.case_id, self.n_samples, self.max_abs_residual,
                              self.tol, self.argmax_point, self.excluded_loci, dict(self.detail), "above")


def _report(check, case_id, values, points, tol, excluded="none", **detail) -> ResidualReport:
    values = np.abs(np.asarray(values, dtype=float)).ravel()
    if values.size == 0:
        return ResidualReport(check, case_id, 0, float("nan"), tol, None, excluded, detail)
    if np.any(~np.isfinite(values)):
        k = int(np.flatnonzero(~np.isfinite(values))[0])
        worst = float("inf")
    else:
        k = int(np.argmax(values))
        worst = float(values[k])
    arg = tuple(float(np.ravel(p)[k]) for p in points) if points else None
    return ResidualReport(check, case_id, values.size, worst, tol, arg, excluded, detail)


# ---------------------------------------------------------------------------
# sampling and direct checks
# ---------------------------------------------------------------------------

def sample_region(region: Region, n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``n`` scrambled-Halton points of ``region`` outside its excluded loci."""
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    xs, ts = [], []
    have = 0
    for _ in range(50):
        pts = sampler.random(max(2 * n, 16))
        x = region.x[0] + (region.x[1] - region.x[0]) * pts[:, 0]
        t = region.t[0] + (region.t[1] - region.t[0]) * pts[:, 1]
        ok = region.allowed(x, t)
        xs.append(x[ok])
        ts.append(t[ok])
        have += int(ok.sum())
        if have >= n:
            break
    if have < n:
        raise ValueError("region exclusions leave too few admissible points")
    return np.concatenate(xs)[:n], np.concatenate(ts)[:n]


def pde_residual_sweep(prob: PdeProblem, u: Expr, region: Region, n: int = 200, tol: float = 1e-8,
                       seed: int = 0, case_id: str = "") -> ResidualReport:
    """Max |residual| of ``u`` over ``n`` low-discrepancy points of ``region``."""
    from .model import residual_expr
    x, t = sample_region(region, n, seed)
    r = ex.evaluate(residual_expr(prob, u), {"x": x, "t": t})
    return _report("pde-residual", case_id, r, (x, t), tol, region.excluded)


def terminal_check(u: Expr, T: float, xs, tol: float = 1e-12, case_id: str = "") -> ResidualReport:
    xs = np.asarray(xs, dtype=float)
    vals = ex.evaluate(u, {"x": xs, "t": np.full_like(xs, T)})
    return _report("terminal", case_id, np.asarray(vals) - 1.0, (xs,), tol)


def barrier_check(u: Expr, spec: BarrierSpec, ts, tol: float = 1e-12, case_id: str = "") -> ResidualReport:
    ts = np.asarray(ts, dtype=float)
    H = ex.evaluate(spec.H, {"t": ts})
    on_barrier = ex.evaluate(u, {"x": H, "t": ts})
    R = ex.evaluate(spec.R, {"t": ts})
    return _report("barrier", case_id, on_barrier - R, (ts,), tol)


def log_collinearity(H: Expr, ts, tol: float = 1e-12, case_id: str = "") -> ResidualReport:
    """Three-point test that log H(t) is affine in t, over consecutive triples of ``ts``."""
    ts = np.sort(np.asarray(ts, dtype=float))
    L = np.log(ex.evaluate(H, {"t": ts}))
    t0, t1, t2 = ts[:-2], ts[1:-1], ts[2:]
    l0, l1, l2 = L[:-2], L[1:-1], L[2:]
    r = (l1 - l0) * (t2 - t0) - (l2 - l0) * (t1 - t0)
    scale = np.maximum(1.0, np.abs(l2 - l0)) * (t2 - t0)
    return _report("barrier-exponential-family", case_id, r / scale, (t1,), tol)


def roundtrip_check(T: Transform, points, tol: float = 1e-12, case_id: str = "") -> ResidualReport:
    """Max coordinate deviation of pull(push(p)) from p (relative above magnitude 1)."""
    x, t, u = (np.asarray(c, dtype=float) for c in points)
    back = T.pull_point(*T.push_point(x, t, u))
    dev = np.max([np.abs(b - a) / np.maximum(1.0, np.abs(a)) for a, b in zip((x, t, u), back)], axis=0)
    return _report("roundtrip", case_id or T.name, dev, (x, t), tol)


# ---------------------------------------------------------------------------
# flows
# ---------------------------------------------------------------------------

def _integrate(g: Generator, x, t, u, epsilon: float, steps: int):
    h = epsilon / steps
    b = {"x": x, "t": t, "u": u}

    def field_at(x, t, u):
        b["x"], b["t"], b["u"] = x, t, u
        return [np.broadcast_to(np.asarray(ex.evaluate(c, b), dtype=float), x.shape)
                for c in (g.xi1, g.xi2, g.eta)]

    s = [x, t, u]
    for _ in range(steps):
        k1 = field_at(*s)
        k2 = field_at(*[s[i] + 0.5 * h * k1[i] for i in range(3)])
        k3 = field_at(*[s[i] + 0.5 * h * k2[i] for i in range(3)])
        k4 = field_at(*[s[i] + h * k3[i] for i in range(3)])
        s = [s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(3)]
    return s


def _index_coords(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Fractional node index; NaN outside the node range."""
    idx = np.interp(values, nodes, np.arange(nodes.size, dtype=float))
    out = (values < nodes[0]) | (values > nodes[-1])
    idx[out] = np.nan
    return idx


def _reconstruct(grid: Grid, px, pt, pu, k: int = 12, radius: float = 2.5, hit: float = 1e-7):
    """Local weighted quadratic least squares from scattered samples onto the grid.

    Works in node-index coordinates so nonuniform grids are isotropic.  A node
    is covered when its neighbourhood has at least 6 samples on both sides
    along each axis; otherwise it is masked.  Samples that land on a node are
    copied exactly.
    """
    ix = _index_coords(grid.x_nodes, px)
    it = _index_coords(grid.t_nodes, pt)
    keep = np.isfinite(ix) & np.isfinite(it) & np.isfinite(pu)
    pts = np.column_stack([ix[keep], it[keep]])
    vals = pu[keep]
    nx, nt = grid.shape
    out = np.full((nx, nt), np.nan)
    if len(vals) < 6:
        return out, np.zeros((nx, nt), dtype=bool)
    tree = cKDTree(pts)
    I, N = np.meshgrid(np.arange(nx, dtype=float), np.arange(nt, dtype=float), indexing="ij")
    targets = np.column_stack([I.ravel(), N.ravel()])
    kk = min(k, len(vals))
    dist, nb = tree.query(targets, k=kk)
    flat = np.full(targets.shape[0], np.nan)

    exact = dist[:, 0] <= hit
    flat[exact] = vals[nb[exact, 0]]

    rest = np.flatnonzero(~exact)
    if rest.size:
        d = dist[rest]
        off = pts[nb[rest]] - targets[rest, None, :]
        inside = d <= radius
        dx, dt = off[..., 0], off[..., 1]
        covered = ((inside.sum(axis=1) >= 6) & (d[:, 0] <= 2.0)
                   & np.any(inside & (dx < 0), axis=1) & np.any(inside & (dx > 0), axis=1)
                   & np.any(inside & (dt < 0), axis=1) & np.any(inside & (dt > 0), axis=1))
        rows = np.flatnonzero(covered)
        if rows.size:
            dx, dt, d, inside = dx[rows], dt[rows], d[rows], inside[rows]
            w = np.where(inside, 1.0 / (d ** 2 + 1e-2), 0.0)
            basis = np.stack([np.ones_like(dx), dx, dt, dx * dx, dx * dt, dt * dt], axis=-1)
            A = basis * w[..., None]
            y = vals[nb[rest[rows]]] * w
            U, s, Vt = np.linalg.svd(A, full_matrices=False)
            good = s[:, -1] > 1e-8 * s[:, 0]
            coef = np.einsum("mji,mj->mi", U, y) / s
            sol = np.einsum("mij,mi->mj", Vt, coef)
            value = np.where(good, sol[:, 0], np.nan)
            flat[rest[rows]] = value
    out = flat.reshape(nx, nt)
    return out, np.isfinite(out)


def flow_map(g: Generator, u: Expr | Surface, epsilon: float, grid: Grid | None = None,
             steps: int | None = None) -> Surface:
    """Image of a solution under the flow of ``g`` for parameter ``epsilon``.

    Every node (x0, t0) with value u0 is carried along
    d(x, t, u)/de = (xi1, xi2, eta) by fixed-step RK4 and the scattered images
    are reconstructed on ``grid``.  Nodes the images do not cover are masked.
    """
    if isinstance(u, Surface):
        if u.x is not None:
            raise FlowError("flow_map needs a surface on a fixed tensor grid")
        src = u
        grid = grid or u.grid
    else:
        if grid is None:
            raise FlowError("an expression input needs a grid")
        X, T = grid.mesh()
        src = Surface(grid, ex.evaluate(u, {"x": X, "t": T}))
    if epsilon == 0.0 and src.grid is grid:
        return Surface(grid, src.values.copy(), src.mask.copy(), meta={"epsilon": 0.0})
    steps = max(64, int(steps or 64))
    X0, T0 = src.grid.mesh()
    m = src.mask
    x0, t0, u0 = X0[m], T0[m], src.values[m]
    try:
        x1, t1, u1 = _integrate(g, x0, t0, u0, epsilon, steps)
    except ex.ExprDomainError as err:
        raise FlowError(f"trajectory left the domain of the generator: {err}") from err
    bad = ~(np.isfinite(x1) & np.isfinite(t1) & np.isfinite(u1))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise FlowError(f"trajectory from (x={x0[k]:.6g}, t={t0[k]:.6g}) left the domain")
    values, mask = _reconstruct(grid, x1, t1, u1)
    if not np.any(mask):
        raise FlowError("the flowed samples do not cover any node of the target grid")
    return Surface(grid, values, mask, meta={"epsilon": epsilon, "steps": steps})


def _derivative(nodes: np.ndarray, U: np.ndarray, valid: np.ndarray, order: int, axis: int):
    W = stencil_weights(nodes, order)
    if axis == 1:
        D, ok = _derivative(nodes, U.T, valid.T, order, 0)
        return D.T, ok.T
    n = nodes.size
    D = np.zeros_like(U)
    ok = np.zeros_like(valid)
    ok[2:n - 2] = True
    for k in range(5):
        D[2:n - 2] += W[2:n - 2, k, None] * np.where(valid[k:n - 4 + k], U[k:n - 4 + k], 0.0)
        ok[2:n - 2] &= valid[k:n - 4 + k]
    D[~ok] = np.nan
    return D, ok


def surface_residual(prob: PdeProblem, s: Surface) -> tuple[np.ndarray, np.ndarray]:
    """PDE residual of a sampled surface from 4th-order differences; (residual, mask)."""
    if s.x is not None:
        raise ValueError("surface_residual needs a fixed tensor grid")
    xs, ts = s.grid.x_nodes, s.grid.t_nodes
    U = s.values
    ux, okx = _derivative(xs, U, s.mask, 1, 0)
    uxx, okxx = _derivative(xs, U, s.mask, 2, 0)
    ut, okt = _derivative(ts, U, s.mask, 1, 1)
    ok = okx & okxx & okt & s.mask
    X, T = s.grid.mesh()
    r = np.full(U.shape, np.nan)
    if not np.any(ok):
        return r, ok
    x, u = X[ok], U[ok]
    f = np.asarray(ex.evaluate(prob.source, {"x": x, "u": u}), dtype=float)
    if prob.kind is EquationKind.HEAT:
        r[ok] = ut[ok] - uxx[ok] - f
    else:
        a = ex.evaluate(diffusion(prob.params), {"x": x})
        b = ex.evaluate(drift(prob.params), {"x": x})
        r[ok] = ut[ok] + a * uxx[ok] + b * ux[ok] - f
    return r, ok


def solution_to_solution_check(g: Generator, prob: PdeProblem, u: Expr | Surface, epsilons: Sequence[float],
                               grid: Grid | None = None, tol: float = 1e-4, case_id: str = "",
                               steps: int | None = None) -> ResidualReport:
    """Worst residual over the flowed surfaces for each epsilon."""
    worst, arg, n_total, per = 0.0, None, 0, {}
    for eps in epsilons:
        s = flow_map(g, u, eps, grid, steps)
        r, ok = surface_residual(prob, s)
        if not np.any(ok):
            raise FlowError(f"no node with a full difference stencil after the flow at epsilon={eps}")
        vals = np.abs(r[ok])
        k = int(np.argmax(vals))
        X, T = s.grid.mesh()
        per[float(eps)] = float(vals[k])
        n_total += vals.size
        if vals[k] >= worst:
            worst, arg = float(vals[k]), (float(X[ok][k]), float(T[ok][k]), float(eps))
    return ResidualReport("flow-residual", case_id, n_total, worst, tol, arg, detail={"per_epsilon": per})


# ---------------------------------------------------------------------------
# generators, frames and the barrier conditions
# ---------------------------------------------------------------------------

def push_generator(T: Transform, g: Generator) -> Generator:
    """Pushforward of ``g`` through ``T``, expressed in the target chart."""
    X, Psi, Phi = T.forward_exprs()
    xi, ti, ui = T.inverse_exprs()
    xi1 = ex.differentiate(X, "x") * g.xi1
    xi2 = ex.differentiate(Psi, "t") * g.xi2
    eta = ex.differentiate(Phi, "x") * g.xi1 + ex.differentiate(Phi, "u") * g.eta
    back = {"x": xi, "t": ti, "u": ui}
    frame = TRANSFORMED if g.frame == ORIGINAL else ORIGINAL
    return Generator(*(ex.substitute(c, back) for c in (xi1, xi2, eta)), frame=frame,
                     label=f"push[{g.label}]")


def _barrier_curve(spec: BarrierSpec, transform: Transform | None):
    """(x_b(s), u_b(s), t -> s) of the barrier curve in the chosen chart."""
    if transform is None:
        return spec.H, spec.R, ex.var("t")
    X, Psi, Phi = transform.forward_exprs()
    _, t_inv, _ = transform.inverse_exprs()
    xb = ex.substitute(ex.substitute(X, {"x": spec.H}), {"t": t_inv})
    ub = ex.substitute(ex.substitute(Phi, {"x": spec.H, "u": spec.R}), {"t": t_inv})
    return xb, ub, Psi


def boundary_invariance_check(generators: Generator | Sequence[Generator], spec: BarrierSpec,
                              tol: float = 1e-8, coefficients: Sequence[float] | None = None,
                              transform: Transform | None = None, ts=None, n: int = 25,
                              case_id: str = "") -> ResidualReport:
    """Infinitesimal invariance of the barrier curve under a combination of generators.

    For X = sum c_k X_k the two conditions are
    xi1 - x_b'(s) xi2 = 0 and eta - u_b'(s) xi2 = 0 along (x_b(s), s, u_b(s)).
    Without ``coefficients`` the unit combination minimising both conditions
    at the sample times is found by SVD and reported.  With ``transform`` the
    curve is pushed into the transformed chart first.
    """
    gens = [generators] if isinstance(generators, Generator) else list(generators)
    want = TRANSFORMED if transform is not None else ORIGINAL
    for g in gens:
        if g.frame not in (want, AMBIGUOUS):
            raise FrameError(f"generator lives in the {g.frame} chart but the barrier is given in the {want} chart")
    if ts is None:
        ts = np.linspace(spec.T - 0.9 * abs(spec.T or 1.0), spec.T, n)
    ts = np.asarray(ts, dtype=float)
    xb, ub, s_of_t = _barrier_curve(spec, transform)
    s = np.asarray(ex.evaluate(s_of_t, {"t": ts}), dtype=float) * np.ones_like(ts)
    dxb = ex.differentiate(xb, "t")
    dub = ex.differentiate(ub, "t")
    at = {"t": s}
    xv, uv = ex.evaluate(xb, at), ex.evaluate(ub, at)
    dx, du = ex.evaluate(dxb, at), ex.evaluate(dub, at)
    pt = {"x": xv * np.ones_like(s), "t": s, "u": uv * np.ones_like(s)}
    cols = []
    for g in gens:
        c1, c2, c3 = (np.broadcast_to(np.asarray(ex.evaluate(c, pt), dtype=float), s.shape)
                      for c in (g.xi1, g.xi2, g.eta))
        cols.append(np.concatenate([c1 - dx * c2, c3 - du * c2]))
    M = np.column_stack(cols)
    if coefficients is not None:
        c = np.asarray(coefficients, dtype=float)
        if c.size != len(gens):
            raise ValueError("one coefficient per generator is required")
    elif len(gens) == 1:
        c = np.ones(1)
    else:
        _, _, Vt = np.linalg.svd(M)
        c = Vt[-1]
        c = c / c[np.argmax(np.abs(c))]
    r = M @ c
    detail = {"coefficients": [float(v) for v in c]}
    if coefficients is None and len(gens) > 1:
        detail["combination_exists"] = bool(np.max(np.abs(r)) < tol)
    return _report("boundary-invariance", case_id, r, (np.concatenate([ts, ts]),), tol, **detail)
