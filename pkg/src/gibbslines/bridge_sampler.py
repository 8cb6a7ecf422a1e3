"""Exact sampling of Brownian bridges and independent-bridge ensembles.

All bridges use diffusion parameter 1. Sampling walks the grid left to right:
conditionally on the value v at u_j and the pinned endpoint y at b, the value
at u_{j+1} is Gaussian with mean v + (y - v) (u_{j+1} - u_j) / (b - u_j) and
variance (u_{j+1} - u_j)(b - u_{j+1}) / (b - u_j). This is exact at the grid
points for any (possibly nonuniform) strictly increasing point array.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Curve, Grid, LineEnsemble
from .errors import LengthMismatch


def bridge_batch(points: np.ndarray, x, y, rng: np.random.Generator, size: int) -> np.ndarray:
    """size independent bridges over `points`; returns array (size, len(points)).

    x and y may be scalars or length-size arrays (one endpoint pair per row).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        raise LengthMismatch("need at least two points to bridge")
    out = np.empty((size, n))
    out[:, 0] = x
    yv = np.broadcast_to(np.asarray(y, dtype=np.float64), (size,))
    if n > 2:
        z = rng.standard_normal((size, n - 2))
        b = pts[-1]
        for j in range(n - 2):
            dt = pts[j + 1] - pts[j]
            rem = b - pts[j]
            mean = out[:, j] + (dt / rem) * (yv - out[:, j])
            sd = math.sqrt(dt * (b - pts[j + 1]) / rem)
            out[:, j + 1] = mean + sd * z[:, j]
    out[:, -1] = yv
    return out


def sample_bridge(grid: Grid, x: float, y: float, rng: np.random.Generator) -> Curve:
    """One Brownian bridge from (a, x) to (b, y) on the grid."""
    vals = bridge_batch(grid.points, x, y, rng, 1)[0]
    return Curve(grid, vals)


def free_ensemble_batch(
    points: np.ndarray,
    x_vec: np.ndarray,
    y_vec: np.ndarray,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """size independent k-curve free ensembles, shape (size, k, n)."""
    x_vec = np.asarray(x_vec, dtype=np.float64)
    y_vec = np.asarray(y_vec, dtype=np.float64)
    if x_vec.shape != y_vec.shape or x_vec.ndim != 1:
        raise LengthMismatch("entrance and exit vectors must be equal-length 1-d")
    k = x_vec.shape[0]
    flat = bridge_batch(points, np.tile(x_vec, size), np.tile(y_vec, size), rng, size * k)
    return flat.reshape(size, k, points.shape[0])


def sample_free_ensemble(
    grid: Grid, x_vec: np.ndarray, y_vec: np.ndarray, rng: np.random.Generator
) -> LineEnsemble:
    """k independent bridges with per-curve endpoint pins; no interaction."""
    curves = free_ensemble_batch(grid.points, x_vec, y_vec, rng, 1)[0]
    return LineEnsemble(grid, curves)
