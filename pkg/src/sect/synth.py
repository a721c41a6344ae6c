"""Synthetic binary-mask cohorts with known topology.

Each subject is a union of ``j`` disjoint disks (components) with ``k`` small
round holes punched into the first disk, drawn on a square canvas. The
response is a smooth function of (k, j) plus Gaussian noise, so a good shape
descriptor should predict it while the distractor table should not.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .complex import euler_characteristic
from .ingest import BinaryImage, mask_to_complex, save_mask, write_matrix

CANVAS = 64


def disk_mask(shape, center, radius) -> np.ndarray:
    rr, cc = np.mgrid[: shape[0], : shape[1]]
    return (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius ** 2


def annulus_mask(shape, center, outer, inner) -> np.ndarray:
    return disk_mask(shape, center, outer) & ~disk_mask(shape, center, inner)


def holed_disk(shape, center, radius, holes: int, angle: float, hole_scale: float = 0.2) -> np.ndarray:
    """Disk with ``holes`` round holes spaced evenly on a ring inside it.

    The ring sits at half the radius, or a quarter of it for a single hole.
    """
    mask = disk_mask(shape, center, radius)
    if holes == 1:
        ring = 0.25 * radius
    else:
        ring = 0.5 * radius
    for i in range(holes):
        phi = angle + 2 * math.pi * i / max(holes, 1)
        c = (center[0] + ring * math.sin(phi), center[1] + ring * math.cos(phi))
        mask &= ~disk_mask(shape, c, hole_scale * radius)
    return mask


def response_mean(k: int, j: int) -> float:
    """Expected survival-like response (days) for k holes and j components."""
    return 600.0 - 90.0 * k - 150.0 * (j - 1) + 10.0 * k * (j - 1)


def draw_subject(rng: np.random.Generator, k: int, j: int, slices: int = 2, size: int = CANVAS):
    """Masks for one subject (one per slice) plus the geometry used."""
    for _ in range(100):
        if j == 1:
            radius = rng.uniform(15, 22)
            centers = [(size / 2 + rng.uniform(-4, 4), size / 2 + rng.uniform(-4, 4))]
            radii = [radius]
        else:
            r0, r1 = rng.uniform(12, 15), rng.uniform(6, 10)
            theta = rng.uniform(0, 2 * math.pi)
            sep = r0 + r1 + rng.uniform(3, 6)
            mid = np.array([size / 2, size / 2])
            off = 0.5 * sep * np.array([math.sin(theta), math.cos(theta)])
            centers = [tuple(mid - off), tuple(mid + off)]
            radii = [r0, r1]
        angle = rng.uniform(0, 2 * math.pi)
        masks = []
        for s in range(slices):
            wobble = rng.uniform(-1.0, 1.0, size=len(radii))
            m = holed_disk((size, size), centers[0], radii[0] + wobble[0], k, angle)
            for c, r, w in zip(centers[1:], radii[1:], wobble[1:]):
                m |= disk_mask((size, size), c, r + w)
            masks.append(m)
        if all(euler_characteristic(mask_to_complex(BinaryImage(m))) == j - k for m in masks):
            return masks, {"centers": [list(map(float, c)) for c in centers], "radii": [float(r) for r in radii], "angle": angle}
    raise RuntimeError(f"could not draw a valid shape with k={k}, j={j}")


def generate_synthetic_cohort(n: int, seed: int, out_dir, noise_features: int = 50,
                              noise_sd: float = 40.0, slices: int = 2) -> Path:
    """Write masks, a noise covariate table, parameters and a manifest under ``out_dir``.

    Returns the manifest path.
    """
    if n < 10:
        raise ValueError("a cohort needs at least 10 subjects")
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    subjects, params = [], []
    for i in range(n):
        sid = f"S{i:03d}"
        k = int(rng.integers(0, 4))
        j = int(rng.integers(1, 3))
        masks, geom = draw_subject(rng, k, j, slices)
        paths = []
        for s, m in enumerate(masks):
            rel = f"masks/{sid}_{s}.pgm"
            save_mask(m, out / rel)
            paths.append(rel)
        y = response_mean(k, j) + noise_sd * rng.standard_normal()
        subjects.append({"id": sid, "masks": paths, "responses": {"y": float(y)}})
        params.append({"id": sid, "holes": k, "components": j, "euler": j - k, **geom})
    ids = [s["id"] for s in subjects]
    write_matrix(out / "noise.csv", ids, rng.standard_normal((n, noise_features)))
    manifest = {"subjects": subjects, "covariates": {"noise": "noise.csv"}}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    with open(out / "params.json", "w") as fh:
        json.dump({"n": n, "seed": seed, "noise_sd": noise_sd, "noise_features": noise_features,
                   "slices": slices, "subjects": params}, fh, indent=1)
    return out / "manifest.json"
