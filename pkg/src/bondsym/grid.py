"""Tensor grids, sampled surfaces and finite-difference weights on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid", "Surface", "fd_weights", "stencil_weights", "uniform_grid",
           "log_uniform_nodes", "GridError"]


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    x_nodes: np.ndarray
    t_nodes: np.ndarray
    spacing: str = "uniform"

    def __post_init__(self):
        x = np.asarray(self.x_nodes, dtype=float)
        t = np.asarray(self.t_nodes, dtype=float)
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "t_nodes", t)
        # A single time slice is allowed: a terminal solve started at T.
        if x.ndim != 1 or t.ndim != 1 or x.size < 3 or t.size < 1:
            raise GridError("a grid needs at least 3 x nodes and one t node")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(t) <= 0):
            raise GridError("grid nodes must be strictly increasing")

    @property
    def shape(self) -> tuple[int, int]:
        return self.x_nodes.size, self.t_nodes.size

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, T) arrays of shape (nx, nt)."""
        return np.meshgrid(self.x_nodes, self.t_nodes, indexing="ij")


def uniform_grid(xrange: tuple[float, float], trange: tuple[float, float], nx: int, nt: int,
                 log_x: bool = False) -> Grid:
    if log_x:
        if xrange[0] <= 0:
            raise GridError("a log-uniform grid needs x_min > 0")
        x = np.exp(np.linspace(np.log(xrange[0]), np.log(xrange[1]), nx))
    else:
        x = np.linspace(xrange[0], xrange[1], nx)
    return Grid(x, np.linspace(trange[0], trange[1], nt), "log-x" if log_x else "uniform")


def log_uniform_nodes(lo: float, hi: float, step: float) -> np.ndarray:
    """Nodes with constant ratio exp(step) covering [lo, hi]; negative ranges mirror |.|."""
    if lo * hi <= 0:
        raise GridError("a geometric node set cannot straddle 0")
    sign = 1.0 if lo > 0 else -1.0
    a, b = sorted((abs(lo), abs(hi)))
    n = int(np.floor(np.log(b / a) / step + 1e-9)) + 1
    nodes = a * np.exp(step * np.arange(n))
    return np.sort(sign * nodes)


@dataclass
class Surface:
    """Values u[i, n] at (x_i, t_n); ``x`` overrides the tensor nodes when the
    spatial nodes move in time (front-fixed barrier solves)."""
    grid: Grid
    values: np.ndarray
    mask: np.ndarray | None = None
    x: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if self.mask is None:
            self.mask = np.isfinite(self.values)
        else:
            self.mask = np.asarray(self.mask, dtype=bool) & np.isfinite(self.values)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        X, T = self.grid.mesh()
        if self.x is not None:
            X = self.x
        return X, T

    def max_abs_diff(self, other: "Surface | np.ndarray") -> float:
        vals = other.values if isinstance(other, Surface) else np.asarray(other)
        m = self.mask if not isinstance(other, Surface) else self.mask & other.mask
        if not np.any(m):
            return float("nan")
        return float(np.max(np.abs(self.values[m] - vals[m])))

    def to_rows(self):
        """(x, t, u) rows, row-major over t then x, valid points only."""
        X, T = self.coordinates()
        nx, nt = self.grid.shape
        for n in range(nt):
            for i in range(nx):
                if self.mask[i, n]:
                    yield X[i, n], T[i, n], self.values[i, n]


def fd_weights(z: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights at ``z`` for derivatives 0..m on nodes ``xs``.

    Fornberg's recursion; returns an array of shape (m + 1, len(xs)).
    """
    n = len(xs)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, xs[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - z
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def stencil_weights(nodes: np.ndarray, order: int, width: int = 5) -> np.ndarray:
    """Centered ``width``-point weights for the ``order``-th derivative at each node.

    Rows for nodes without a full centered stencil are NaN.
    """
    half = width // 2
    out = np.full((nodes.size, width), np.nan)
    for i in range(half, nodes.size - half):
        out[i] = fd_weights(nodes[i], nodes[i - half:i + half + 1], order)[order]
    return out
