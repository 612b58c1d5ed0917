"""Quadrature building blocks: tensor Gauss-Legendre grids and panel rules."""

import math

import numpy as np

_PANEL_ORDER = 15


def gauss_legendre(a: float, b: float, nodes: int):
    """Gauss-Legendre nodes/weights rescaled from [-1, 1] to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def box_gauss_grid(box, panels):
    """Tensor-product Gauss-Legendre grid on an axis-aligned box.

    box: (n, 2) array of [lo, hi] per axis. panels: node count per axis
    (int, applied to every axis). Returns (points (N, n), weights (N,)).
    """
    box = np.asarray(box, dtype=float)
    dim = box.shape[0]
    axes = [gauss_legendre(lo, hi, panels) for lo, hi in box]
    grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
    w = np.ones(pts.shape[0])
    for k in range(dim):
        wk = np.meshgrid(*[axes[i][1] if i == k else np.ones_like(axes[i][1])
                           for i in range(dim)], indexing="ij")[k]
        w *= wk.reshape(-1)
    return pts, w


def chunked(n_total: int, chunk: int):
    """Yield (start, stop) index pairs covering range(n_total)."""
    start = 0
    while start < n_total:
        stop = min(start + chunk, n_total)
        yield start, stop
        start = stop


def panel_cumulative(f, grid):
    """Cumulative integral of a callable along an increasing grid.

    Returns G with G[i] = integral of f from grid[0] to grid[i], computed
    with a fixed-order Gauss rule per panel and compensated accumulation.
    """
    grid = np.asarray(grid, dtype=float)
    x, w = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    lo = grid[:-1]
    half = 0.5 * np.diff(grid)
    nodes = lo[:, None] + half[:, None] * (x[None, :] + 1.0)
    vals = f(nodes.reshape(-1)).reshape(nodes.shape)
    panel = half * (vals @ w)
    out = np.empty(grid.shape[0])
    out[0] = 0.0
    acc = 0.0
    comp = 0.0
    for i, p in enumerate(panel):
        y = p - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        out[i + 1] = acc
    return out


def trapezoid(values, grid):
    """Plain trapezoid rule on a (possibly non-uniform) grid."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(grid)))


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in dimension n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
