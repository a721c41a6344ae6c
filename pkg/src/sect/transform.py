"""Smooth Euler characteristic curves, SECT profiles and the SECT distance.

EC curves are step functions sampled at the left end of each grid cell, so both
the mean and the running integral use the left-rectangle rule: the value at
threshold y_i is held on [y_i, y_{i+1}). Under that rule the sample at b only
closes the last cell and never enters an integral, which makes the smoothed
curve vanish exactly at b.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .complex import SimplicialComplex
from .filtration import DEFAULT_DIRECTIONS, DEFAULT_LEVELS, ECCurve, direction_set, ec_curve, threshold_grid


class ProfileMismatch(ValueError):
    pass


def center_curve(curve: ECCurve, include_endpoint: bool = False) -> np.ndarray:
    """Subtract the mean EC value over [a, b] from every sample.

    The mean is the left-rectangle average, i.e. over all samples but the last.
    ``include_endpoint=True`` averages over every sample instead (the plain
    arithmetic mean); the smoothed curve then no longer ends at zero.
    """
    s = np.asarray(curve.samples, dtype=float)
    mean = s.mean() if include_endpoint else s[:-1].mean()
    return s - mean


@dataclass(frozen=True, eq=False)
class SECCurve:
    direction: np.ndarray
    a: float
    b: float
    samples: np.ndarray

    @property
    def step(self) -> float:
        return (self.b - self.a) / (len(self.samples) - 1)

    @property
    def thresholds(self) -> np.ndarray:
        return threshold_grid(self.a, self.b, len(self.samples))


def smooth_curve(z, a: float, b: float, direction=None) -> SECCurve:
    """Running integral F_j = h * sum_{i<j} z_i of a centered EC curve."""
    z = np.asarray(z, dtype=float)
    if len(z) < 2:
        raise ValueError("need at least two samples")
    h = (b - a) / (len(z) - 1)
    F = np.concatenate([[0.0], h * np.cumsum(z[:-1])])
    return SECCurve(None if direction is None else np.asarray(direction, dtype=float), float(a), float(b), F)


@dataclass(eq=False)
class SECTProfile:
    """SEC curves of one shape over a fixed direction set.

    ``F[i]`` holds the T samples of the curve for ``directions[i]`` on its own
    grid [a[i], b[i]]. For slice aggregates the grid bounds are slice averages.
    """

    directions: np.ndarray
    a: np.ndarray
    b: np.ndarray
    F: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def T(self) -> int:
        return self.F.shape[1]

    @property
    def vector(self) -> np.ndarray:
        return self.F.ravel()

    def curve(self, i: int) -> SECCurve:
        return SECCurve(self.directions[i], float(self.a[i]), float(self.b[i]), self.F[i])

    def to_json(self) -> dict:
        return {
            "directions": self.directions.tolist(),
            "levels": self.T,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "F": self.F.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SECTProfile":
        F = np.asarray(data["F"], dtype=float).reshape(len(data["directions"]), int(data["levels"]))
        return cls(
            np.asarray(data["directions"], dtype=float),
            np.asarray(data["a"], dtype=float),
            np.asarray(data["b"], dtype=float),
            F,
            dict(data.get("meta", {})),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "SECTProfile":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def sect(K: SimplicialComplex, directions=None, T: int = DEFAULT_LEVELS, **meta) -> SECTProfile:
    """Smooth Euler characteristic transform of ``K``.

    ``directions`` is an (m, d) array of unit vectors; it defaults to the
    standard 72-direction circle grid (or a 72-point sphere lattice in 3D).
    """
    if not K.count(0):
        raise ValueError("cannot transform an empty complex")
    if directions is None:
        directions = direction_set(DEFAULT_DIRECTIONS, K.dim)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    a = np.empty(len(directions))
    b = np.empty(len(directions))
    F = np.empty((len(directions), T))
    for i, nu in enumerate(directions):
        c = ec_curve(K, nu, T)
        a[i], b[i] = c.a, c.b
        F[i] = smooth_curve(center_curve(c), c.a, c.b).samples
    return SECTProfile(directions, a, b, F, dict(meta))


def _check_compatible(profiles: Sequence[SECTProfile]) -> None:
    first = profiles[0]
    for p in profiles[1:]:
        if p.F.shape != first.F.shape:
            raise ProfileMismatch(f"profile shapes differ: {first.F.shape} vs {p.F.shape}")
        if p.directions.shape != first.directions.shape or not np.allclose(
            p.directions, first.directions, rtol=0, atol=1e-12
        ):
            raise ProfileMismatch("profiles use different direction sets")


def aggregate_slices(profiles: Sequence[SECTProfile]) -> SECTProfile:
    """Average per-slice profiles direction by direction."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("no profiles to aggregate")
    _check_compatible(profiles)
    meta = {"slices": [p.meta for p in profiles]}
    ids = {p.meta.get("source") for p in profiles} - {None}
    if len(ids) == 1:
        meta["source"] = ids.pop()
    stack = lambda attr: np.stack([getattr(p, attr) for p in profiles])
    return SECTProfile(
        profiles[0].directions.copy(),
        stack("a").mean(axis=0),
        stack("b").mean(axis=0),
        stack("F").mean(axis=0),
        meta,
    )


def _resample(F: np.ndarray, a: float, b: float, grid: np.ndarray) -> np.ndarray:
    # zero before a, frozen at the terminal value after b
    if b == a:
        return np.where(grid < a, 0.0, F[-1])
    x = threshold_grid(a, b, len(F))
    return np.interp(grid, x, F, left=0.0, right=F[-1])


def sect_distance(P: SECTProfile, Q: SECTProfile) -> float:
    """Discretized L2 distance between two SECT profiles.

    Each pair of curves is resampled on the union interval of their grids with
    T points; directions are weighted uniformly.
    """
    _check_compatible([P, Q])
    total = 0.0
    T = P.T
    for i in range(P.m):
        lo, hi = min(P.a[i], Q.a[i]), max(P.b[i], Q.b[i])
        grid = threshold_grid(lo, hi, T) if hi > lo else np.full(T, lo)
        diff = _resample(P.F[i], P.a[i], P.b[i], grid) - _resample(Q.F[i], Q.a[i], Q.b[i], grid)
        total += (hi - lo) / (T - 1) * float(diff @ diff)
    return float(np.sqrt(total / P.m))


def write_curve_csv(curve: ECCurve, path) -> SECCurve:
    """Dump threshold, EC, centered and smoothed values of one direction."""
    z = center_curve(curve)
    sec = smooth_curve(z, curve.a, curve.b, curve.direction)
    with _open_out(path) as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "ec", "z", "f"])
        for row in zip(curve.thresholds, curve.samples, z, sec.samples):
            w.writerow([repr(float(row[0])), int(row[1]), repr(float(row[2])), repr(float(row[3]))])
    return sec


def _open_out(target):
    """Open a path for writing, or pass an already open text stream through."""
    if isinstance(target, (str, os.PathLike)):
        return open(target, "w", newline="")
    return contextlib.nullcontext(target)


class ProfileCache:
    """JSON files keyed by (shape id, m, T, direction convention)."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, shape_id: str, m: int, T: int, convention: str) -> Path:
        key = json.dumps([shape_id, m, T, convention])
        return self.root / (hashlib.sha1(key.encode()).hexdigest()[:20] + ".json")

    def get(self, shape_id, m, T, convention):
        p = self._path(shape_id, m, T, convention)
        return SECTProfile.load(p) if p.exists() else None

    def put(self, profile: SECTProfile, shape_id, m, T, convention) -> None:
        p = self._path(shape_id, m, T, convention)
        tmp = p.with_suffix(".tmp")
        profile.save(tmp)
        os.replace(tmp, p)
