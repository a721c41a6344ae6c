"""Directional height filtrations and Euler characteristic curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complex import SimplicialComplex, euler_characteristic

DEFAULT_LEVELS = 100
DEFAULT_DIRECTIONS = 72

# Heights closer than this (relative to the largest |height|) count as tied.
# Directions built from cos/sin are not exactly symmetric, so vertices that
# should share a height can differ in the last bits.
HEIGHT_RTOL = 1e-10


def as_direction(nu) -> np.ndarray:
    """Validate a unit vector in R^2 or R^3."""
    nu = np.asarray(nu, dtype=float).ravel()
    if nu.shape not in ((2,), (3,)):
        raise ValueError(f"direction must have 2 or 3 components, got {nu.shape[0]}")
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise ValueError(f"direction {nu} is not a unit vector")
    return nu


def direction_from_angle(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def direction_set(m: int, d: int = 2) -> np.ndarray:
    """``m`` directions on the unit circle (d=2) or sphere (d=3), one per row.

    In the plane the angles are 2*pi*j/m for j = 0..m-1; on the sphere a
    Fibonacci lattice gives near-uniform coverage with equal weights.
    """
    if m < 1:
        raise ValueError("need at least one direction")
    if d == 2:
        angles = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if d == 3:
        j = np.arange(m) + 0.5
        z = 1.0 - 2.0 * j / m
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = np.pi * (3.0 - math.sqrt(5.0)) * np.arange(m)
        dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def height(x, nu) -> float:
    x = np.asarray(x, dtype=float).ravel()
    nu = np.asarray(nu, dtype=float).ravel()
    if x.shape != nu.shape:
        raise ValueError(f"point has {x.size} coordinates but direction has {nu.size}")
    return float(x @ nu)


def vertex_heights(K: SimplicialComplex, nu) -> np.ndarray:
    """Heights of every row of the coordinate table along ``nu``."""
    nu = np.asarray(nu, dtype=float).ravel()
    if nu.size != K.dim:
        raise ValueError(f"direction has {nu.size} components, complex lives in R^{K.dim}")
    return K.vertices @ nu


def extremal_heights(K: SimplicialComplex, nu) -> tuple[float, float]:
    if not K.count(0):
        raise ValueError("empty complex has no extremal heights")
    h = vertex_heights(K, nu)[K.vertex_ids]
    return float(h.min()), float(h.max())


def height_tolerance(heights: np.ndarray) -> float:
    scale = float(np.abs(heights).max()) if len(heights) else 0.0
    return HEIGHT_RTOL * max(1.0, scale)


def sublevel_complex(K: SimplicialComplex, nu, r: float) -> SimplicialComplex:
    """Largest subcomplex whose vertices all satisfy x . nu <= r (up to rounding)."""
    h = vertex_heights(K, nu)
    return K.subcomplex(h <= r + height_tolerance(h[K.vertex_ids]))


@dataclass(frozen=True, eq=False)
class ECCurve:
    """EC values at ``len(samples)`` uniform thresholds on [a, b], endpoints included."""

    direction: np.ndarray
    a: float
    b: float
    samples: np.ndarray

    @property
    def thresholds(self) -> np.ndarray:
        return threshold_grid(self.a, self.b, len(self.samples))


def threshold_grid(a: float, b: float, T: int) -> np.ndarray:
    if T < 2:
        raise ValueError("need at least two thresholds")
    grid = np.linspace(a, b, T)
    grid[0], grid[-1] = a, b
    return grid


def entry_heights(K: SimplicialComplex, heights: np.ndarray) -> list[np.ndarray]:
    """Per-degree entry heights under the lower-star rule (max over vertices)."""
    return [heights[arr].max(axis=1) if len(arr) else np.empty(0) for arr in K.simplices]


def ec_at(K: SimplicialComplex, heights: np.ndarray, thresholds) -> np.ndarray:
    """EC of the closed sublevel complexes at each threshold in a single sort-and-count sweep."""
    entries = entry_heights(K, heights)
    values = np.concatenate(entries)
    signs = np.concatenate([np.full(len(e), (-1) ** k, dtype=np.int64) for k, e in enumerate(entries)])
    order = np.argsort(values, kind="stable")
    running = np.concatenate([[0], np.cumsum(signs[order])])
    tol = height_tolerance(heights[K.vertex_ids])
    return running[np.searchsorted(values[order], np.asarray(thresholds) + tol, side="right")]


def ec_curve(K: SimplicialComplex, nu, T: int = DEFAULT_LEVELS) -> ECCurve:
    """Euler characteristic curve of ``K`` along ``nu`` sampled at T levels.

    When the shape is flat across ``nu`` (a == b) the curve is the constant chi(K).
    """
    if T < 2:
        raise ValueError("need at least two thresholds")
    nu = as_direction(nu)
    h = vertex_heights(K, nu)
    a, b = extremal_heights(K, nu)
    if a == b:
        samples = np.full(T, euler_characteristic(K), dtype=np.int64)
    else:
        samples = ec_at(K, h, threshold_grid(a, b, T))
    return ECCurve(nu, a, b, samples)
