"""Sublevel-set persistent homology over Z2 by standard column reduction."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .complex import MAX_DEGREE, SimplicialComplex
from .transform import _open_out


class FiltrationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """A complex with one filtration value per simplex.

    ``values[k][i]`` is the entry value of ``base.simplices[k][i]``.
    """

    base: SimplicialComplex
    values: tuple[np.ndarray, ...]

    def check_monotone(self) -> None:
        K = self.base
        for k in range(1, MAX_DEGREE + 1):
            if not K.count(k):
                continue
            for j in range(k + 1):
                faces = np.delete(K.simplices[k], j, axis=1)
                idx = np.array([K.index_of(f) for f in faces], dtype=np.int64)
                if np.any(self.values[k - 1][idx] > self.values[k]):
                    raise FiltrationError(f"degree-{k} simplex enters before one of its faces")

    def ordered(self) -> list[tuple[float, int, tuple[int, ...]]]:
        """Simplices sorted by (value, degree, vertex tuple)."""
        items = [
            (float(v), k, s)
            for k in range(MAX_DEGREE + 1)
            for v, s in zip(self.values[k], self.base.simplex_tuples(k))
        ]
        items.sort()
        return items

    def sublevel(self, t: float) -> SimplicialComplex:
        return SimplicialComplex(
            self.base.vertices,
            tuple(arr[vals <= t] for arr, vals in zip(self.base.simplices, self.values)),
        )


def lower_star_filtration(K: SimplicialComplex, heights) -> FilteredComplex:
    """Each simplex enters at the largest height among its vertices.

    ``heights`` is indexed by vertex id over the whole coordinate table of ``K``.
    """
    heights = np.asarray(heights, dtype=float).ravel()
    if len(heights) != len(K.vertices):
        raise FiltrationError(f"expected {len(K.vertices)} heights, got {len(heights)}")
    if not np.all(np.isfinite(heights)):
        raise FiltrationError("heights must be finite")
    values = tuple(
        heights[arr].max(axis=1) if len(arr) else np.empty(0) for arr in K.simplices
    )
    return FilteredComplex(K, values)


class Bar(NamedTuple):
    degree: int
    birth: float
    death: float


@dataclass(frozen=True)
class Barcode:
    intervals: tuple[Bar, ...]

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def degree(self, k: int) -> list[Bar]:
        return [b for b in self.intervals if b.degree == k]

    def nonzero(self) -> "Barcode":
        """Drop zero-length bars."""
        return Barcode(tuple(b for b in self.intervals if b.death > b.birth))

    def alive(self, t: float, k: int) -> int:
        """Number of degree-k bars with birth <= t < death."""
        return sum(1 for b in self.intervals if b.degree == k and b.birth <= t < b.death)

    def infinite(self, k: int) -> int:
        return sum(1 for b in self.intervals if b.degree == k and math.isinf(b.death))

    def diagram(self, k: int) -> np.ndarray:
        """(birth, death) pairs of degree k as an (n, 2) array."""
        return np.array([(b.birth, b.death) for b in self.degree(k)], dtype=float).reshape(-1, 2)


def compute_barcode(F: FilteredComplex, check: bool = True) -> Barcode:
    """Pair creators and destroyers by reducing the filtered boundary matrix.

    Zero-length bars are kept; use :meth:`Barcode.nonzero` to drop them.
    """
    if check:
        F.check_monotone()
    order = F.ordered()
    position = {s: i for i, (_, _, s) in enumerate(order)}
    low_owner: dict[int, int] = {}
    columns: list[int] = []
    for j, (_, k, s) in enumerate(order):
        col = 0
        if k:
            for face in itertools.combinations(s, k):
                col |= 1 << position[face]
        while col:
            low = col.bit_length() - 1
            other = low_owner.get(low)
            if other is None:
                low_owner[low] = j
                break
            col ^= columns[other]
        columns.append(col)

    killed = set(low_owner)
    bars = []
    for creator, destroyer in low_owner.items():
        v, k, _ = order[creator]
        bars.append(Bar(k, v, order[destroyer][0]))
    for i, (v, k, _) in enumerate(order):
        if columns[i] == 0 and i not in killed:
            bars.append(Bar(k, v, math.inf))
    bars.sort(key=lambda b: (b.degree, b.birth, b.death))
    return Barcode(tuple(bars))


def write_barcode_csv(barcode: Barcode, path, drop_zero_length: bool = False) -> None:
    bars: Iterable[Bar] = barcode.nonzero() if drop_zero_length else barcode
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "birth", "death"])
        for b in bars:
            writer.writerow([b.degree, repr(b.birth), "inf" if math.isinf(b.death) else repr(b.death)])


def read_barcode_csv(path) -> Barcode:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Barcode(tuple(Bar(int(r["degree"]), float(r["birth"]), float(r["death"])) for r in rows))
