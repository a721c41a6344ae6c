"""Repeated random-split evaluation of GP regression across covariate types.

For every split the responses are standardized with training statistics,
bandwidths are chosen by k-fold cross-validation on the training part, and
held-out predictions are scored by R^2 and RMSEP. Optimal% counts how often a
covariate type attains the smallest RMSEP within a (response, kernel) cell;
exact ties share the credit equally.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
from scipy import stats

from . import gp
from .filtration import DEFAULT_DIRECTIONS, DEFAULT_LEVELS, direction_set
from .ingest import Dataset, IngestError, Subject, load_dataset, load_mask, load_off, mask_to_complex
from .transform import ProfileCache, SECTProfile, aggregate_slices, sect

log = logging.getLogger(__name__)

WORKERS_ENV = "SECT_WORKERS"


@dataclass
class ExperimentConfig:
    manifest: str
    responses: list[str] = field(default_factory=lambda: ["y"])
    data_types: list[str] = field(default_factory=lambda: ["sect"])
    kernels: list[str] = field(default_factory=lambda: ["linear", "gaussian", "cauchy"])
    folds: int = 10
    grid: list[float] = field(default_factory=lambda: gp.default_grid().tolist())
    n_splits: int = 1000
    train_fraction: float = 0.8
    tau2: float | str = gp.DEFAULT_NOISE
    seed: int = 0
    output_dir: str | None = None
    directions: int = DEFAULT_DIRECTIONS
    levels: int = DEFAULT_LEVELS
    standardize_features: bool = True
    strict: bool = True
    cache_dir: str | None = None

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.n_splits < 1:
            raise ValueError("n_splits must be at least 1")
        if isinstance(self.grid, dict):
            g = self.grid
            count = int(round((g["stop"] - g["start"]) / g["step"])) + 1
            self.grid = np.round(g["start"] + g["step"] * np.arange(count), 10).tolist()
        self.grid = [float(t) for t in self.grid]
        if not (self.tau2 == "ml" or float(self.tau2) >= 0):
            raise ValueError("tau2 must be a non-negative number or 'ml'")
        for k in self.kernels:
            gp.KernelSpec(k, 1.0)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        for key in ("manifest", "output_dir", "cache_dir"):
            if data.get(key) is not None and not os.path.isabs(data[key]):
                data[key] = str(path.parent / data[key])
        return cls(**data)


def subject_profile(subject: Subject, m: int, T: int, cache: ProfileCache | None = None) -> SECTProfile:
    """Slice-averaged SECT profile of one subject (or the mesh profile)."""
    convention = "circle" if subject.masks else "fibonacci"
    if cache is not None:
        hit = cache.get(subject.id, m, T, convention)
        if hit is not None:
            return hit
    if subject.mesh is not None and not subject.masks:
        K = load_off(subject.mesh)
        profile = sect(K, direction_set(m, 3), T, source=subject.id)
    else:
        dirs = direction_set(m, 2)
        profiles = [
            sect(mask_to_complex(load_mask(p, subject.spacing)), dirs, T, source=subject.id, slice=i)
            for i, p in enumerate(subject.masks)
        ]
        profile = aggregate_slices(profiles)
    if cache is not None:
        cache.put(profile, subject.id, m, T, convention)
    return profile


def sect_matrix(dataset: Dataset, m: int, T: int, cache: ProfileCache | None = None) -> np.ndarray:
    return np.vstack([subject_profile(s, m, T, cache).vector for s in dataset.subjects])


def split_indices(n: int, train_fraction: float, seed: int, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Train/test membership of split ``index``; reproducible in isolation."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    perm = rng.permutation(n)
    n_train = min(n - 2, max(2, int(round(train_fraction * n))))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def cv_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index, 1))


_STATE: dict = {}


def _init_worker(state):
    _STATE.clear()
    _STATE.update(state)


def run_split(index: int) -> dict:
    """Evaluate every (response, kernel, data type) cell on one split."""
    cfg: ExperimentConfig = _STATE["config"]
    features: dict[str, np.ndarray] = _STATE["features"]
    responses: dict[str, np.ndarray] = _STATE["responses"]
    n = len(next(iter(responses.values())))
    train, test = split_indices(n, cfg.train_fraction, cfg.seed, index)
    grid = np.asarray(cfg.grid)
    cells = []
    for rname, y in responses.items():
        mu, sd = y[train].mean(), y[train].std()
        if sd == 0:
            raise ValueError(f"response {rname!r} is constant on the training part of split {index}")
        y_tr, y_te = (y[train] - mu) / sd, (y[test] - mu) / sd
        for kernel in cfg.kernels:
            for dtype in cfg.data_types:
                scaler = gp.FeatureScaler(cfg.standardize_features, cfg.standardize_features)
                scaler.fit(features[dtype][train], kernel)
                X_tr = scaler.transform(features[dtype][train])
                X_te = scaler.transform(features[dtype][test])
                tau2 = gp.DEFAULT_NOISE if cfg.tau2 == "ml" else float(cfg.tau2)
                theta = None
                if kernel != "linear":
                    theta = gp.cv_bandwidth(kernel, X_tr, y_tr, cfg.folds, grid, tau2, cv_seed(cfg.seed, index))
                spec = gp.KernelSpec(kernel, theta, X_tr.shape[1])
                if cfg.tau2 == "ml":
                    tau2 = gp.select_noise(spec, X_tr, y_tr)
                model = gp.fit(spec, tau2, X_tr, y_tr)
                pred, _ = gp.posterior_predict(model, X_te)
                cells.append({
                    "response": rname,
                    "kernel": kernel,
                    "data_type": dtype,
                    "theta": theta,
                    "tau2": tau2,
                    "r2": gp.r_squared(y_te, pred),
                    "rmsep": gp.rmsep(y_te, pred),
                })
    # the (seed, index) pair regenerates this split via split_indices and cv_seed
    return {"split": index, "seed": [cfg.seed, index], "test": test.tolist(), "cells": cells}


def optimal_credit(rmseps: dict[str, float], rel_tol: float = 1e-12) -> dict[str, float]:
    """Share one unit of credit among the data types with the smallest RMSEP."""
    best = min(rmseps.values())
    winners = [k for k, v in rmseps.items() if v <= best + rel_tol * max(1.0, abs(best))]
    return {k: (1.0 / len(winners) if k in winners else 0.0) for k in rmseps}


@dataclass
class ExperimentReport:
    config: dict
    subjects: list[str]
    summary: list[dict]
    tests: list[dict]
    splits: list[dict]
    version: str

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1, allow_nan=False, default=_jsonable)

    def table_rows(self) -> list[dict]:
        return [
            {k: row[k] for k in ("response", "kernel", "data_type", "r2_mean", "r2_se", "optimal_pct", "theta_median")}
            for row in self.summary
        ]

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.dumps())
        with open(out / "table.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(self.table_rows()[0]))
            w.writeheader()
            for row in self.table_rows():
                w.writerow({k: _fmt(v) for k, v in row.items()})
        with open(out / "splits.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["split", "response", "kernel", "data_type", "theta", "tau2", "r2", "rmsep"])
            for rec in self.splits:
                for c in rec["cells"]:
                    w.writerow([rec["split"], c["response"], c["kernel"], c["data_type"],
                                _fmt(c["theta"]), _fmt(c["tau2"]), _fmt(c["r2"]), _fmt(c["rmsep"])])

    def format_table(self) -> str:
        lines = [f"{'response':<10} {'kernel':<9} {'data type':<14} {'R2 (se)':<18} {'Optimal%':>9} {'theta':>6}"]
        for r in self.table_rows():
            theta = "---" if r["theta_median"] is None else f"{r['theta_median']:.1f}"
            lines.append(
                f"{r['response']:<10} {r['kernel']:<9} {r['data_type']:<14} "
                f"{r['r2_mean']:.3f} ({r['r2_se']:.3f})    {r['optimal_pct']:>8.1f}% {theta:>6}"
            )
        return "\n".join(lines)


def _fmt(v):
    return "" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def summarize(config: ExperimentConfig, splits: list[dict]) -> tuple[list[dict], list[dict]]:
    n = len(splits)
    summary, tests = [], []
    for rname in config.responses:
        for kernel in config.kernels:
            per_type = {d: {"r2": [], "rmsep": [], "theta": []} for d in config.data_types}
            credit = dict.fromkeys(config.data_types, 0.0)
            for rec in splits:
                cells = [c for c in rec["cells"] if c["response"] == rname and c["kernel"] == kernel]
                for c in cells:
                    per_type[c["data_type"]]["r2"].append(c["r2"])
                    per_type[c["data_type"]]["rmsep"].append(c["rmsep"])
                    per_type[c["data_type"]]["theta"].append(c["theta"])
                for d, share in optimal_credit({c["data_type"]: c["rmsep"] for c in cells}).items():
                    credit[d] += share
            for d in config.data_types:
                r2 = np.array(per_type[d]["r2"])
                thetas = [t for t in per_type[d]["theta"] if t is not None]
                summary.append({
                    "response": rname,
                    "kernel": kernel,
                    "data_type": d,
                    "r2_mean": float(r2.mean()),
                    "r2_se": float(r2.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                    "rmsep_mean": float(np.mean(per_type[d]["rmsep"])),
                    "optimal_pct": 100.0 * credit[d] / n,
                    "theta_median": float(np.median(thetas)) if thetas else None,
                    "theta_mean": float(np.mean(thetas)) if thetas else None,
                })
            # paired one-sided t-test on per-split R^2: H1 mean(R2_a - R2_b) > 0
            for a in config.data_types:
                for b in config.data_types:
                    if a == b or n < 2:
                        continue
                    diff = np.array(per_type[a]["r2"]) - np.array(per_type[b]["r2"])
                    p = None
                    if np.ptp(diff) > 0:
                        p = float(stats.ttest_rel(per_type[a]["r2"], per_type[b]["r2"], alternative="greater").pvalue)
                    tests.append({"response": rname, "kernel": kernel, "better": a, "worse": b,
                                  "mean_diff": float(diff.mean()), "p_value": p,
                                  "test": "paired one-sided t-test on per-split R^2"})
    return summary, tests


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def prepare(config: ExperimentConfig) -> tuple[Dataset, dict, dict]:
    dataset = load_dataset(config.manifest, config.data_types, strict=config.strict)
    if len(dataset.subjects) < 10:
        raise IngestError(f"need at least 10 subjects, manifest provides {len(dataset.subjects)}")
    cache = ProfileCache(config.cache_dir) if config.cache_dir else None
    features = {}
    for d in config.data_types:
        features[d] = sect_matrix(dataset, config.directions, config.levels, cache) if d == "sect" else dataset.matrices[d]
    responses = {r: dataset.response(r) for r in config.responses}
    return dataset, features, responses


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    dataset, features, responses = prepare(config)
    state = {"config": config, "features": features, "responses": responses}
    workers = worker_count(workers)
    if workers == 1:
        _init_worker(state)
        splits = [run_split(i) for i in range(config.n_splits)]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(state,)) as pool:
            splits = list(pool.map(run_split, range(config.n_splits), chunksize=max(1, config.n_splits // (4 * workers))))
    summary, tests = summarize(config, splits)
    cfg = asdict(config)
    cfg.pop("output_dir")
    cfg.pop("cache_dir")
    report = ExperimentReport(cfg, dataset.ids, summary, tests, splits, _version())
    if config.output_dir:
        report.write(config.output_dir)
    return report
