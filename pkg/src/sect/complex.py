"""Finite simplicial complexes embedded in R^2 or R^3 and their Z2 homology.

A complex keeps a coordinate table for every vertex index it may reference and,
for each degree k = 0..3, a lexicographically sorted integer array of k-simplices
(one row of k+1 strictly increasing vertex indices per simplex). Subcomplexes
share the coordinate table of their parent, which makes nesting checks a plain
set comparison.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

MAX_DEGREE = 3


class ComplexError(ValueError):
    """Raised for malformed simplicial complex input."""


def _canonical(rows: np.ndarray, width: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, width)
    if rows.shape[0] == 0:
        return np.empty((0, width), dtype=np.int64)
    rows = np.sort(rows, axis=1)
    return np.unique(rows, axis=0)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Embedded simplicial complex with simplices of degree at most 3.

    Parameters
    ----------
    vertices : (n, dim) array
        Coordinate table. Only indices listed in ``simplices[0]`` belong to the
        complex; the rest of the table may be shared with a parent complex.
    simplices : tuple of 4 int arrays
        ``simplices[k]`` has shape (n_k, k + 1), rows sorted and unique.
    """

    vertices: np.ndarray
    simplices: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] not in (2, 3):
            raise ComplexError(f"vertices must be an (n, 2) or (n, 3) array, got shape {verts.shape}")
        if not np.all(np.isfinite(verts)):
            raise ComplexError("vertex coordinates must be finite")
        simplices = list(self.simplices) + [None] * (MAX_DEGREE + 1 - len(self.simplices))
        if len(simplices) != MAX_DEGREE + 1:
            raise ComplexError("at most degree-3 simplices are supported")
        simplices = tuple(
            np.empty((0, k + 1), dtype=np.int64) if s is None else np.asarray(s, dtype=np.int64).reshape(-1, k + 1)
            for k, s in enumerate(simplices)
        )
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "simplices", simplices)

    @property
    def dim(self) -> int:
        """Embedding dimension."""
        return self.vertices.shape[1]

    @property
    def top_degree(self) -> int:
        """Largest k with at least one k-simplex, or -1 for the empty complex."""
        for k in range(MAX_DEGREE, -1, -1):
            if len(self.simplices[k]):
                return k
        return -1

    def count(self, k: int) -> int:
        return len(self.simplices[k]) if 0 <= k <= MAX_DEGREE else 0

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    @property
    def vertex_ids(self) -> np.ndarray:
        return self.simplices[0][:, 0]

    def simplex_tuples(self, k: int) -> list[tuple[int, ...]]:
        return [tuple(int(i) for i in row) for row in self.simplices[k]]

    @cached_property
    def _index(self) -> list[dict[tuple[int, ...], int]]:
        return [{s: i for i, s in enumerate(self.simplex_tuples(k))} for k in range(MAX_DEGREE + 1)]

    def index_of(self, simplex: Sequence[int]) -> int:
        """Position of ``simplex`` inside ``simplices[len(simplex) - 1]``."""
        key = tuple(sorted(int(i) for i in simplex))
        return self._index[len(key) - 1][key]

    def __contains__(self, simplex) -> bool:
        key = tuple(sorted(int(i) for i in simplex))
        return 1 <= len(key) <= MAX_DEGREE + 1 and key in self._index[len(key) - 1]

    def all_simplices(self) -> list[tuple[int, ...]]:
        return [s for k in range(MAX_DEGREE + 1) for s in self.simplex_tuples(k)]

    def check(self) -> None:
        """Validate index ranges, ordering, uniqueness and closure.

        Raises
        ------
        ComplexError
            On the first violated invariant.
        """
        n = len(self.vertices)
        for k, arr in enumerate(self.simplices):
            if arr.size == 0:
                continue
            if arr.min() < 0 or arr.max() >= n:
                raise ComplexError(f"degree-{k} simplex references a vertex outside 0..{n - 1}")
            if k and np.any(np.diff(arr, axis=1) <= 0):
                raise ComplexError(f"degree-{k} simplex indices must be strictly increasing")
            if len(np.unique(arr, axis=0)) != len(arr):
                raise ComplexError(f"duplicate degree-{k} simplices")
        for k in range(1, MAX_DEGREE + 1):
            faces = self._index[k - 1]
            for s in self.simplex_tuples(k):
                for face in itertools.combinations(s, k):
                    if face not in faces:
                        raise ComplexError(f"face {face} of simplex {s} is missing (closure)")

    def subcomplex(self, keep_vertex: np.ndarray) -> "SimplicialComplex":
        """Largest subcomplex spanned by vertices whose mask entry is True."""
        keep_vertex = np.asarray(keep_vertex, dtype=bool)
        return SimplicialComplex(
            self.vertices, tuple(arr[np.all(keep_vertex[arr], axis=1)] for arr in self.simplices)
        )

    def __repr__(self) -> str:
        return f"SimplicialComplex(dim={self.dim}, counts={self.counts})"


def from_arrays(vertices, simplices: Sequence[np.ndarray], closed: bool = True) -> SimplicialComplex:
    """Build a complex from per-degree index arrays, canonicalizing rows.

    With ``closed=False`` the faces of every simplex are added; otherwise the
    input is trusted to be closed already.
    """
    arrays = [_canonical(s, k + 1) for k, s in enumerate(simplices)]
    arrays += [np.empty((0, k + 1), dtype=np.int64) for k in range(len(arrays), MAX_DEGREE + 1)]
    if not closed:
        for k in range(MAX_DEGREE, 0, -1):
            if not len(arrays[k]):
                continue
            faces = [np.delete(arrays[k], j, axis=1) for j in range(k + 1)]
            arrays[k - 1] = _canonical(np.vstack([arrays[k - 1], *faces]), k)
    return SimplicialComplex(np.asarray(vertices, dtype=float), tuple(arrays))


def build_complex(vertices, maximal_simplices: Iterable[Sequence[int]]) -> SimplicialComplex:
    """Close a list of simplices under taking faces.

    Examples
    --------
    >>> K = build_complex([[0, 0], [1, 0], [0, 1]], [(0, 1, 2)])
    >>> K.counts
    (3, 3, 1, 0)
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] not in (2, 3):
        raise ComplexError(f"embedding dimension must be 2 or 3, got vertex array of shape {verts.shape}")
    n = len(verts)
    buckets: list[list[tuple[int, ...]]] = [[] for _ in range(MAX_DEGREE + 1)]
    for simplex in maximal_simplices:
        s = tuple(int(i) for i in simplex)
        if not 1 <= len(s) <= MAX_DEGREE + 1:
            raise ComplexError(f"simplex {s} must have between 1 and {MAX_DEGREE + 1} vertices")
        if len(set(s)) != len(s):
            raise ComplexError(f"simplex {s} repeats a vertex")
        bad = [i for i in s if not 0 <= i < n]
        if bad:
            raise ComplexError(f"simplex {s} references vertex {bad[0]} outside 0..{n - 1}")
        buckets[len(s) - 1].append(tuple(sorted(s)))
    arrays = [np.array(b, dtype=np.int64).reshape(-1, k + 1) for k, b in enumerate(buckets)]
    return from_arrays(verts, arrays, closed=False)


def disjoint_union(a: SimplicialComplex, b: SimplicialComplex) -> SimplicialComplex:
    if a.dim != b.dim:
        raise ComplexError("cannot join complexes of different embedding dimension")
    shift = len(a.vertices)
    return SimplicialComplex(
        np.vstack([a.vertices, b.vertices]),
        tuple(np.vstack([sa, sb + shift]) for sa, sb in zip(a.simplices, b.simplices)),
    )


def euler_characteristic(K: SimplicialComplex) -> int:
    """Alternating sum of simplex counts, V - E + F - T."""
    return int(sum((-1) ** k * c for k, c in enumerate(K.counts)))


@dataclass(frozen=True, eq=False)
class Z2Matrix:
    """Dense matrix over the binary field."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", (np.asarray(self.data, dtype=np.uint8) & 1).reshape(np.shape(self.data)))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __matmul__(self, other: "Z2Matrix") -> "Z2Matrix":
        return Z2Matrix((self.data.astype(np.int64) @ other.data.astype(np.int64)) % 2)

    def is_zero(self) -> bool:
        return not self.data.any()

    def rank(self) -> int:
        return z2_rank(
            int.from_bytes(np.packbits(col, bitorder="little").tobytes(), "little") for col in self.data.T
        )


def z2_rank(columns: Iterable[int]) -> int:
    """Rank of a set of bit-packed Z2 vectors by Gaussian elimination."""
    pivots: dict[int, int] = {}
    for col in columns:
        while col:
            p = col.bit_length() - 1
            if p in pivots:
                col ^= pivots[p]
            else:
                pivots[p] = col
                break
    return len(pivots)


def _check_degree(k: int) -> None:
    if not 1 <= k <= MAX_DEGREE:
        raise ComplexError(f"boundary degree must lie in 1..{MAX_DEGREE}, got {k}")


def boundary_columns(K: SimplicialComplex, k: int) -> list[int]:
    """Bit-packed columns of the degree-k boundary map (bit i = i-th (k-1)-simplex)."""
    _check_degree(k)
    faces = K._index[k - 1]
    cols = []
    for s in K.simplex_tuples(k):
        col = 0
        for face in itertools.combinations(s, k):
            col |= 1 << faces[face]
        cols.append(col)
    return cols


def boundary_matrix(K: SimplicialComplex, k: int) -> Z2Matrix:
    """Matrix of the boundary map C_k -> C_{k-1} in the stored simplex bases."""
    _check_degree(k)
    out = np.zeros((K.count(k - 1), K.count(k)), dtype=np.uint8)
    for j, s in enumerate(K.simplex_tuples(k)):
        for face in itertools.combinations(s, k):
            out[K._index[k - 1][face], j] = 1
    return Z2Matrix(out)


def betti_numbers(K: SimplicialComplex) -> list[int]:
    """Z2 Betti numbers beta_0..beta_D with D = max(2, top simplex degree)."""
    top = max(2, K.top_degree)
    ranks = [0] * (MAX_DEGREE + 2)
    for k in range(1, MAX_DEGREE + 1):
        if K.count(k):
            ranks[k] = z2_rank(boundary_columns(K, k))
    return [K.count(k) - ranks[k] - ranks[k + 1] for k in range(top + 1)]
