"""Finite-difference pricer for the backward problem and the moving-barrier problem.

The equation is marched backward from t = T in s = T - t,

    u_s = a(x, t) u_xx + b(x, t) u_x - f(x, u),

with the theta-scheme on the linear part and ``f`` linearised around the
latest iterate (one Newton correction by default).  Spatial derivatives use
three-point weights on the given nodes, which are second order on smoothly
mapped grids such as log-uniform ones.  Each step is one tridiagonal solve.

Boundary rules: at x_min either the equation itself with one-sided
differences ("interior") or Dirichlet data; at x_max either the equation
with u_xx dropped ("linear") or Dirichlet data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr
from .grid import Grid, Surface, fd_weights
from .kernels import solve_tridiagonal, tridiag_matvec
from .model import EquationKind, Params, PdeProblem, diffusion, drift
from .solutions import BarrierSpec

__all__ = ["SolverConfig", "SolverError", "BarrierError", "make_grid", "solve_terminal",
           "solve_barrier", "convergence_order", "ConvergenceResult", "surface_error", "Grid", "Surface"]

NEAR_RULES = ("interior", "dirichlet")
FAR_RULES = ("linear", "dirichlet")


class SolverError(RuntimeError):
    pass


class BarrierError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    far_field: str = "linear"
    near_field: str = "interior"
    barrier: str = "front-fixing"
    newton_iterations: int = 1
    newton_tol: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.far_field not in FAR_RULES:
            raise ValueError(f"far_field must be one of {FAR_RULES}")
        if self.near_field not in NEAR_RULES:
            raise ValueError(f"near_field must be one of {NEAR_RULES}")
        if self.barrier != "front-fixing":
            raise ValueError("only front-fixing barrier enforcement is implemented")
        if self.newton_iterations < 1:
            raise ValueError("newton_iterations must be at least 1")


def make_grid(p: Params, xrange: tuple[float, float], trange: tuple[float, float],
              nx: int, nt: int) -> Grid:
    """Uniform in log x when gamma >= 1/2, uniform in x otherwise."""
    if xrange[0] <= 0:
        raise ValueError("x_min must be positive")
    if p.gamma >= 0.5:
        x = np.exp(np.linspace(math.log(xrange[0]), math.log(xrange[1]), nx))
        kind = "log-x"
    else:
        x = np.linspace(xrange[0], xrange[1], nx)
        kind = "uniform"
    return Grid(x, np.linspace(trange[0], trange[1], nt), kind)


# ---------------------------------------------------------------------------
# discretisation
# ---------------------------------------------------------------------------

@dataclass
class _Stencils:
    """Difference weights on fixed computational nodes."""
    nodes: np.ndarray
    d1: np.ndarray = field(init=False)   # (n, 3) centred first derivative, rows 1..n-2
    d2: np.ndarray = field(init=False)
    left: np.ndarray = field(init=False)  # (2, 4) one-sided u', u'' at node 0
    right_d1: np.ndarray = field(init=False)  # (3,) one-sided u' at node n-1

    def __post_init__(self):
        z = self.nodes
        n = z.size
        self.d1 = np.zeros((n, 3))
        self.d2 = np.zeros((n, 3))
        for i in range(1, n - 1):
            w = fd_weights(z[i], z[i - 1:i + 2], 2)
            self.d1[i], self.d2[i] = w[1], w[2]
        w = fd_weights(z[0], z[:4], 2)
        self.left = w[1:3]
        self.right_d1 = fd_weights(z[-1], z[-3:], 1)[1]


def _operator(st: _Stencils, a: np.ndarray, b: np.ndarray):
    """Bands of L = a d2 + b d1 on interior rows, the one-sided row 0 (4 entries)
    and the far-field row b d1 with u_zz dropped (3 entries)."""
    lo = a * st.d2[:, 0] + b * st.d1[:, 0]
    di = a * st.d2[:, 1] + b * st.d1[:, 1]
    up = a * st.d2[:, 2] + b * st.d1[:, 2]
    row0 = a[0] * st.left[1] + b[0] * st.left[0]
    row_n = b[-1] * st.right_d1
    return lo, di, up, row0, row_n


def _apply(L, v: np.ndarray, near_interior: bool, far_linear: bool) -> np.ndarray:
    lo, di, up, row0, row_n = L
    out = tridiag_matvec(lo, di, up, v)
    out[0] = row0 @ v[:4] if near_interior else 0.0
    out[-1] = row_n @ v[-3:] if far_linear else 0.0
    return out


@dataclass
class _Problem1D:
    """Coefficients of u_s = a u_zz + b u_z - f(x, u) on fixed nodes z."""
    z: np.ndarray
    times: np.ndarray                 # ascending calendar times
    coeffs: object                    # t -> (a, b)
    x_of: object                      # t -> physical x at the nodes
    f: Expr
    fu: Expr
    left: object | None               # t -> Dirichlet value, None for the interior row
    right: object | None              # t -> Dirichlet value, None for the linearity row


def _march(P: _Problem1D, terminal: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    st = _Stencils(P.z)
    n = P.z.size
    nt = P.times.size
    U = np.empty((n, nt))
    U[:, -1] = terminal
    th = cfg.theta
    near_interior = P.left is None
    far_linear = P.right is None

    def src(x, u):
        b = {"x": x, "u": u}
        return (np.broadcast_to(np.asarray(ex.evaluate(P.f, b), dtype=float), u.shape),
                np.broadcast_to(np.asarray(ex.evaluate(P.fu, b), dtype=float), u.shape))

    t_old = P.times[-1]
    L_old = _operator(st, *P.coeffs(t_old))
    x_old = P.x_of(t_old)
    for k in range(nt - 2, -1, -1):
        t_new = P.times[k]
        ds = t_old - t_new
        L_new = _operator(st, *P.coeffs(t_new))
        x_new = P.x_of(t_new)
        u_old = U[:, k + 1]
        f_old, _ = src(x_old, u_old)
        explicit = u_old + (1.0 - th) * ds * (_apply(L_old, u_old, near_interior, far_linear) - f_old)
        u_star = u_old.copy()
        for it in range(cfg.newton_iterations):
            fs, J = src(x_new, u_star)
            rhs = explicit - th * ds * (fs - J * u_star)
            lo = -th * ds * L_new[0]
            di = 1.0 - th * ds * (L_new[1] - J)
            up = -th * ds * L_new[2]
            lo, di, up, rhs = lo.copy(), di.copy(), up.copy(), rhs.copy()
            # node 0
            if near_interior:
                row = -th * ds * L_new[3]
                row[0] += 1.0 + th * ds * J[0]
                r0 = rhs[0]
                # remove the entries on nodes 3 and 2 with rows 2 and 1
                if row[3] != 0.0:
                    m = row[3] / up[2]
                    row[1] -= m * lo[2]
                    row[2] -= m * di[2]
                    r0 -= m * rhs[2]
                if row[2] != 0.0:
                    m = row[2] / up[1]
                    row[0] -= m * lo[1]
                    row[1] -= m * di[1]
                    r0 -= m * rhs[1]
                di[0], up[0], rhs[0] = row[0], row[1], r0
            else:
                di[0], up[0], rhs[0] = 1.0, 0.0, P.left(t_new)
            lo[0] = 0.0
            # node n-1
            if far_linear:
                # u_s = b u_z - f at the last node: the equation with u_zz = 0.
                w = -th * ds * L_new[4]
                w[2] += 1.0 + th * ds * J[n - 1]
                r_n = rhs[n - 1]
                if w[0] != 0.0:
                    m = w[0] / lo[n - 2]
                    w[1] -= m * di[n - 2]
                    w[2] -= m * up[n - 2]
                    r_n -= m * rhs[n - 2]
                lo[n - 1], di[n - 1], rhs[n - 1] = w[1], w[2], r_n
            else:
                lo[n - 1], di[n - 1], rhs[n - 1] = 0.0, 1.0, P.right(t_new)
            up[n - 1] = 0.0
            try:
                u_new = solve_tridiagonal(lo, di, up, rhs)
            except ZeroDivisionError as err:
                raise SolverError(f"singular system at step {k} (t={t_new:.6g}): {err}") from err
            if not np.all(np.isfinite(u_new)):
                raise SolverError(f"non-finite values at step {k} (t={t_new:.6g})")
            change = np.max(np.abs(u_new - u_star))
            if it > 0 and not np.isfinite(change):
                raise SolverError(f"Newton iteration diverged at step {k}")
            u_star = u_new
            if cfg.newton_iterations > 1 and change <= cfg.newton_tol * max(1.0, np.max(np.abs(u_new))):
                break
        else:
            if cfg.newton_iterations > 1 and change > 1e3 * max(1.0, np.max(np.abs(u_new))):
                raise SolverError(f"Newton iteration diverged at step {k}")
        U[:, k] = u_star
        t_old, L_old, x_old = t_new, L_new, x_new
    return U


def _source_pair(prob: PdeProblem) -> tuple[Expr, Expr]:
    if prob.kind is not EquationKind.BOND:
        raise SolverError("the finite-difference solver handles the bond-pricing class only")
    return prob.source, ex.differentiate(prob.source, "u")


def _dirichlet(boundary: Expr | None, x_fn, t_node_index: int, what: str):
    if boundary is None:
        raise SolverError(f"{what} Dirichlet condition needs a boundary expression u(x, t)")

    def value(t):
        return float(ex.evaluate(boundary, {"x": x_fn(t)[t_node_index], "t": t}))
    return value


def solve_terminal(prob: PdeProblem, grid: Grid, payoff: Expr, cfg: SolverConfig | None = None,
                   boundary: Expr | None = None) -> Surface:
    """Backward solve of the terminal problem on a fixed grid.

    ``boundary`` is an exact u(x, t) used by Dirichlet boundary rules.
    """
    cfg = cfg or SolverConfig()
    f, fu = _source_pair(prob)
    x = grid.x_nodes
    if x[0] <= 0:
        raise SolverError("x_min must be positive")
    p = prob.params
    a = np.asarray(ex.evaluate(diffusion(p), {"x": x}), dtype=float) * np.ones_like(x)
    b = np.asarray(ex.evaluate(drift(p), {"x": x}), dtype=float) * np.ones_like(x)
    x_fn = lambda t: x
    P = _Problem1D(
        z=x, times=grid.t_nodes, coeffs=lambda t: (a, b), x_of=x_fn, f=f, fu=fu,
        left=None if cfg.near_field == "interior" else _dirichlet(boundary, x_fn, 0, "near-field"),
        right=None if cfg.far_field == "linear" else _dirichlet(boundary, x_fn, -1, "far-field"),
    )
    terminal = np.asarray(ex.evaluate(payoff, {"x": x, "t": grid.t_nodes[-1]}), dtype=float) * np.ones_like(x)
    if grid.t_nodes.size == 1:
        U = terminal[:, None]
    else:
        U = _march(P, terminal, cfg)
    return Surface(grid, U, meta={"solver": "terminal", "theta": cfg.theta})


def solve_barrier(prob: PdeProblem, grid: Grid, spec: BarrierSpec, payoff: Expr,
                  cfg: SolverConfig | None = None, boundary: Expr | None = None) -> Surface:
    """Down-and-out barrier problem on x >= H(t) by front fixing y = x / H(t).

    The returned surface stores the moving physical nodes x_i(t_n) = y_i H(t_n)
    in ``Surface.x``; u(H(t_n), t_n) = R(t_n) holds exactly at node 0.
    """
    cfg = cfg or SolverConfig()
    f, fu = _source_pair(prob)
    ts = grid.t_nodes
    H = np.asarray(ex.evaluate(spec.H, {"t": ts}), dtype=float) * np.ones_like(ts)
    x_lo, x_hi = grid.x_nodes[0], grid.x_nodes[-1]
    if np.any(H <= x_lo) or np.any(H >= x_hi):
        raise BarrierError(f"barrier leaves the grid: H in [{H.min():.6g}, {H.max():.6g}] "
                           f"vs x in ({x_lo:.6g}, {x_hi:.6g})")
    y_max = x_hi / H.max()
    ny = grid.x_nodes.size
    p = prob.params
    if p.gamma >= 0.5:
        y = np.exp(np.linspace(0.0, math.log(y_max), ny))
    else:
        y = np.linspace(1.0, y_max, ny)
    dH = ex.differentiate(spec.H, "t")
    diff_e, drift_e = diffusion(p), drift(p)

    def coeffs(t):
        h = float(ex.evaluate(spec.H, {"t": t}))
        hp = float(ex.evaluate(dH, {"t": t}))
        xs = y * h
        a = np.asarray(ex.evaluate(diff_e, {"x": xs}), dtype=float) / h ** 2
        b = np.asarray(ex.evaluate(drift_e, {"x": xs}), dtype=float) / h - (hp / h) * y
        return a * np.ones_like(y), b * np.ones_like(y)

    def x_of(t):
        return y * float(ex.evaluate(spec.H, {"t": t}))

    def rebate(t):
        return float(ex.evaluate(spec.R, {"t": t}))

    P = _Problem1D(z=y, times=ts, coeffs=coeffs, x_of=x_of, f=f, fu=fu, left=rebate,
                   right=None if cfg.far_field == "linear" else _dirichlet(boundary, x_of, -1, "far-field"))
    terminal = np.asarray(ex.evaluate(payoff, {"x": x_of(ts[-1]), "t": ts[-1]}), dtype=float) * np.ones_like(y)
    U = _march(P, terminal, cfg)
    X = y[:, None] * H[None, :]
    return Surface(Grid(y, ts, "front-fixed"), U, x=X,
                   meta={"solver": "barrier", "theta": cfg.theta, "y_nodes": y})


@dataclass(frozen=True)
class ConvergenceResult:
    order: float
    errors: tuple[float, ...]
    steps: tuple[float, ...]
    exact: bool
    monotone: bool


def surface_error(s: Surface, exact: Expr) -> float:
    X, T = s.coordinates()
    ref = np.asarray(ex.evaluate(exact, {"x": X, "t": T}), dtype=float)
    return float(np.max(np.abs(s.values - ref)[s.mask]))


def convergence_order(prob: PdeProblem, exact: Expr, resolutions: Sequence[tuple[int, int]],
                      cfg: SolverConfig | None = None, xrange=(0.25, 4.0), trange=None,
                      payoff: Expr | None = None, spec: BarrierSpec | None = None) -> ConvergenceResult:
    """Least-squares slope of log L-inf error against log step over refinements.

    The terminal data and Dirichlet values come from ``exact``.
    """
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    cfg = cfg or SolverConfig()
    if trange is None:
        raise ValueError("trange is required")
    errs, hs = [], []
    for nx, nt in resolutions:
        grid = make_grid(prob.params, xrange, trange, nx, nt)
        pay = payoff if payoff is not None else exact
        if spec is None:
            s = solve_terminal(prob, grid, pay, cfg, boundary=exact)
        else:
            s = solve_barrier(prob, grid, spec, pay, cfg, boundary=exact)
        errs.append(surface_error(s, exact))
        hs.append(1.0 / max(nx - 1, 1))
    errs_a = np.array(errs)
    if np.all(errs_a < 1e-12):
        return ConvergenceResult(float("inf"), tuple(errs), tuple(hs), True, True)
    h = np.array(hs)
    slope = np.polyfit(np.log(h), np.log(np.maximum(errs_a, 1e-300)), 1)[0]
    monotone = bool(np.all(np.diff(errs_a) < 0))
    return ConvergenceResult(float(slope), tuple(errs), tuple(hs), False, monotone)
