"""Loading shapes and covariate tables.

Binary masks (PGM or 0/1 CSV) become planar complexes: one vertex per
foreground pixel centre, edges between 4-adjacent foreground pixels, and two
triangles for every fully foreground 2x2 block, split along the diagonal from
its lower-left to its upper-right pixel. Image rows run downwards, so row ``i``
of an ``H``-row image sits at height ``y = (H - 1 - i) * spacing``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .complex import SimplicialComplex, build_complex, from_arrays

log = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


@dataclass(eq=False)
class BinaryImage:
    mask: np.ndarray
    spacing: tuple[float, float] = (1.0, 1.0)  # (row, column)

    def __post_init__(self):
        self.mask = np.asarray(self.mask).astype(bool)
        if self.mask.ndim != 2:
            raise IngestError(f"mask must be two-dimensional, got shape {self.mask.shape}")
        if np.isscalar(self.spacing):
            self.spacing = (float(self.spacing), float(self.spacing))

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def foreground(self) -> int:
        return int(self.mask.sum())


def _read_csv_mask(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestError(f"{path}: empty mask file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise IngestError(f"{path}: rows have differing lengths {sorted(widths)}")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise IngestError(f"{path}: non-numeric entry ({exc})") from None


def load_mask(path, spacing=1.0) -> BinaryImage:
    """Read a PGM (P2/P5) or comma-separated 0/1 mask; nonzero pixels are foreground."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    if path.suffix.lower() == ".csv":
        data = _read_csv_mask(path)
    else:
        try:
            with Image.open(path) as img:
                data = np.asarray(img)
        except OSError as exc:
            raise IngestError(f"{path}: unreadable image ({exc})") from None
        if data.ndim == 3:
            data = data.max(axis=2)
    return BinaryImage(data != 0, spacing)


def save_mask(img: BinaryImage | np.ndarray, path) -> None:
    mask = img.mask if isinstance(img, BinaryImage) else np.asarray(img, dtype=bool)
    path = Path(path)
    if path.suffix.lower() == ".csv":
        np.savetxt(path, mask.astype(int), fmt="%d", delimiter=",")
    else:
        Image.fromarray(mask.astype(np.uint8) * 255).save(path)


def mask_to_complex(img: BinaryImage) -> SimplicialComplex:
    mask = img.mask
    if not mask.any():
        raise IngestError("mask has no foreground pixels")
    H, W = mask.shape
    rows, cols = np.nonzero(mask)
    ids = np.full(mask.shape, -1, dtype=np.int64)
    ids[rows, cols] = np.arange(len(rows))
    sy, sx = img.spacing
    verts = np.column_stack([cols * sx, (H - 1 - rows) * sy]).astype(float)

    horiz = mask[:, :-1] & mask[:, 1:]
    vert = mask[:-1, :] & mask[1:, :]
    block = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1] & mask[1:, 1:]
    ul, ur = ids[:-1, :-1][block], ids[:-1, 1:][block]
    ll, lr = ids[1:, :-1][block], ids[1:, 1:][block]
    edges = np.vstack([
        np.column_stack([ids[:, :-1][horiz], ids[:, 1:][horiz]]),
        np.column_stack([ids[:-1, :][vert], ids[1:, :][vert]]),
        np.column_stack([ll, ur]),
    ])
    tris = np.vstack([np.column_stack([ll, ur, ul]), np.column_stack([ll, ur, lr])])
    return from_arrays(verts, [ids[rows, cols][:, None], edges, tris])


def _off_tokens(path: Path) -> list[str]:
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    return tokens


def load_off(path) -> SimplicialComplex:
    """Read a triangle mesh in OFF format."""
    path = Path(path)
    tokens = _off_tokens(path)
    if not tokens or tokens[0] != "OFF":
        raise IngestError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for f in range(nf):
            n = int(tokens[pos])
            if n != 3:
                raise IngestError(f"{path}: face {f} has {n} vertices; only triangles are supported")
            faces.append(tuple(int(t) for t in tokens[pos + 1:pos + 4]))
            pos += 1 + n
    except (IndexError, ValueError) as exc:
        if isinstance(exc, IngestError):
            raise
        raise IngestError(f"{path}: malformed OFF body ({exc})") from None
    return build_complex(verts, faces)


def write_off(K: SimplicialComplex, path) -> None:
    verts = K.vertices if K.dim == 3 else np.column_stack([K.vertices, np.zeros(len(K.vertices))])
    with open(path, "w") as fh:
        fh.write(f"OFF\n{len(verts)} {K.count(2)} {K.count(1)}\n")
        for v in verts:
            fh.write(" ".join(repr(float(c)) for c in v) + "\n")
        for t in K.simplices[2]:
            fh.write("3 " + " ".join(str(int(i)) for i in t) + "\n")


def dump_complex(K: SimplicialComplex, path) -> None:
    """Write coordinates and every simplex as JSON."""
    with open(path, "w") as fh:
        json.dump({"vertices": K.vertices.tolist(), "simplices": [s.tolist() for s in K.simplices]}, fh)


def read_complex(path) -> SimplicialComplex:
    with open(path) as fh:
        data = json.load(fh)
    K = from_arrays(data["vertices"], [np.asarray(s, dtype=np.int64) for s in data["simplices"]])
    K.check()
    return K


def load_shape(path, spacing=1.0) -> SimplicialComplex:
    """Dispatch on file extension: .off mesh, .json complex dump, otherwise a mask."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        return load_off(path)
    if suffix == ".json":
        return read_complex(path)
    return mask_to_complex(load_mask(path, spacing))


# --- cohort manifests -------------------------------------------------------

@dataclass
class Subject:
    id: str
    masks: list[Path] = field(default_factory=list)
    mesh: Path | None = None
    spacing: float = 1.0
    responses: dict[str, float] = field(default_factory=dict)

    @property
    def has_shape(self) -> bool:
        return bool(self.masks) or self.mesh is not None


@dataclass
class DatasetManifest:
    root: Path
    subjects: list[Subject]
    covariates: dict[str, Path]

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.subjects]


@dataclass
class Dataset:
    manifest: DatasetManifest
    matrices: dict[str, np.ndarray]
    feature_names: dict[str, list[str]]

    @property
    def subjects(self) -> list[Subject]:
        return self.manifest.subjects

    @property
    def ids(self) -> list[str]:
        return self.manifest.ids

    def response(self, name: str) -> np.ndarray:
        missing = [s.id for s in self.subjects if name not in s.responses]
        if missing:
            raise IngestError(f"response {name!r} missing for subject(s) {', '.join(missing)}")
        return np.array([float(s.responses[name]) for s in self.subjects])


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    root = path.parent
    subjects = []
    seen = set()
    for entry in data.get("subjects", []):
        sid = str(entry["id"])
        if sid in seen:
            raise IngestError(f"duplicate subject id {sid!r} in manifest")
        seen.add(sid)
        masks = [root / p for p in entry.get("masks", [])]
        mesh = root / entry["mesh"] if entry.get("mesh") else None
        for p in masks + ([mesh] if mesh else []):
            if not p.exists():
                raise IngestError(f"subject {sid!r}: referenced file {p} does not exist")
        responses = {k: float(v) for k, v in entry.get("responses", {}).items()}
        subjects.append(Subject(sid, masks, mesh, float(entry.get("pixel_spacing", 1.0)), responses))
    covariates = {name: root / p for name, p in data.get("covariates", {}).items()}
    for name, p in covariates.items():
        if not p.exists():
            raise IngestError(f"covariate table {name!r}: file {p} does not exist")
    return DatasetManifest(root, subjects, covariates)


def read_matrix(path) -> tuple[list[str], list[str], np.ndarray]:
    """CSV with a header row; the first column holds subject ids."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise IngestError(f"{path}: empty covariate table")
    header, body = rows[0], rows[1:]
    ids = [r[0] for r in body]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise IngestError(f"{path}: duplicate subject id(s) {', '.join(dup)}")
    if any(len(r) != len(header) for r in body):
        raise IngestError(f"{path}: ragged rows")
    try:
        X = np.array([[float(c) for c in r[1:]] for r in body], dtype=float).reshape(len(body), len(header) - 1)
    except ValueError as exc:
        raise IngestError(f"{path}: non-numeric entry ({exc})") from None
    if not np.all(np.isfinite(X)):
        bad = ids[int(np.nonzero(~np.isfinite(X).all(axis=1))[0][0])]
        raise IngestError(f"{path}: NaN or infinite entry for subject {bad}")
    return ids, header[1:], X


def write_matrix(path, ids: Sequence[str], X: np.ndarray, names: Sequence[str] | None = None) -> None:
    X = np.asarray(X, dtype=float)
    names = names or [f"f{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *names])
        for sid, row in zip(ids, X):
            w.writerow([sid, *(repr(float(v)) for v in row)])


def load_dataset(path, types: Sequence[str] | None = None, strict: bool = False) -> Dataset:
    """Load a manifest and align its covariate tables to the subject order.

    ``types`` names the covariate tables to load; the pseudo-type ``"sect"``
    requires a mask list or mesh and is computed later. Subjects lacking a
    requested type are dropped with a warning, or rejected when ``strict``.
    """
    manifest = read_manifest(path)
    types = list(manifest.covariates) if types is None else list(types)
    known = {s.id for s in manifest.subjects}
    tables = {}
    for name in types:
        if name == "sect":
            continue
        if name not in manifest.covariates:
            raise IngestError(f"manifest has no covariate table named {name!r}")
        ids, names, X = read_matrix(manifest.covariates[name])
        unknown = [i for i in ids if i not in known]
        if unknown:
            raise IngestError(f"covariate table {name!r} lists unknown subject id {unknown[0]!r}")
        tables[name] = (dict(zip(ids, range(len(ids)))), names, X)

    keep = []
    for s in manifest.subjects:
        missing = [t for t in types if (t == "sect" and not s.has_shape) or (t != "sect" and s.id not in tables[t][0])]
        if missing:
            if strict:
                raise IngestError(f"subject {s.id!r} lacks covariate type(s) {', '.join(missing)}")
            log.warning("dropping subject %s: missing %s", s.id, ", ".join(missing))
            continue
        keep.append(s)
    manifest = DatasetManifest(manifest.root, keep, manifest.covariates)
    matrices = {name: X[[rows[s.id] for s in keep]] for name, (rows, _, X) in tables.items()}
    names = {name: cols for name, (_, cols, _) in tables.items()}
    return Dataset(manifest, matrices, names)
