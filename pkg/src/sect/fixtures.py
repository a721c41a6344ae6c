"""Small reference shapes shipped with the package."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .complex import SimplicialComplex
from .ingest import BinaryImage, load_mask, load_off, mask_to_complex, read_complex
from .synth import annulus_mask, disk_mask


def data_path(name: str):
    return resources.files("sect") / "data" / name


def torus() -> SimplicialComplex:
    """Triangulated torus (9 x 6 grid, 54 vertices, 108 triangles)."""
    return load_off(data_path("torus.off"))


def six_vertex() -> tuple[SimplicialComplex, np.ndarray]:
    """Six-vertex complex swept upwards, with vertices entering in the order
    v0, v1, v2, v4, v3, v5 at integer heights 0..5.

    Returns the complex and the upward direction.
    """
    return read_complex(data_path("six_vertex.json")), np.array([0.0, 1.0])


def hand() -> SimplicialComplex:
    """Closed polygonal outline of a hand with the fingers pointing to -x."""
    return read_complex(data_path("hand.json"))


def nonunique_pair() -> tuple[SimplicialComplex, SimplicialComplex, np.ndarray]:
    """Two different pixel shapes whose upward EC curves coincide."""
    a = mask_to_complex(load_mask(data_path("nonunique_a.csv")))
    b = mask_to_complex(load_mask(data_path("nonunique_b.csv")))
    return a, b, np.array([0.0, 1.0])


def disk(size: int = 21, radius: float = 8.0) -> SimplicialComplex:
    c = (size - 1) / 2
    return mask_to_complex(BinaryImage(disk_mask((size, size), (c, c), radius)))


def annulus(size: int = 21, outer: float = 8.0, inner: float = 4.0) -> SimplicialComplex:
    c = (size - 1) / 2
    return mask_to_complex(BinaryImage(annulus_mask((size, size), (c, c), outer, inner)))
