"""Gaussian-process regression on flattened feature vectors.

Three covariance functions are supported:

* ``linear``   sigma(u, v) = u.v / p
* ``gaussian`` sigma(u, v) = exp(-|u - v|^2 / (2 theta))
* ``cauchy``   sigma(u, v) = 1 / (1 + theta |u - v|^2)

Bandwidths are picked by k-fold cross-validation over a grid (0.1 to 10 in
steps of 0.1 by default).
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

FAMILIES = ("linear", "gaussian", "cauchy")
DEFAULT_NOISE = 0.1
NOISE_GRID = (1e-3, 1e-2, 1e-1, 1.0)
JITTERS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


def default_grid() -> np.ndarray:
    return np.round(np.arange(1, 101) * 0.1, 10)


class GPFitError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    family: str
    theta: float | None = None
    p: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family != "linear":
            if self.theta is None or not self.theta > 0:
                raise ValueError(f"{self.family} kernel needs a positive bandwidth, got {self.theta}")

    def with_theta(self, theta: float) -> "KernelSpec":
        return KernelSpec(self.family, float(theta), self.p)


def _length(spec: KernelSpec, n: int) -> None:
    if spec.p is not None and n != spec.p:
        raise ValueError(f"feature length {n} does not match kernel length {spec.p}")


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"feature vectors differ in length: {u.size} vs {v.size}")
    _length(spec, u.size)
    if spec.family == "linear":
        return float(u @ v) / u.size
    d2 = float((u - v) @ (u - v))
    if spec.family == "gaussian":
        return float(np.exp(-d2 / (2.0 * spec.theta)))
    return 1.0 / (1.0 + spec.theta * d2)


def sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    XX = np.einsum("ij,ij->i", X, X)
    YY = np.einsum("ij,ij->i", Y, Y)
    D = XX[:, None] + YY[None, :] - 2.0 * X @ Y.T
    return np.maximum(D, 0.0)


def kernel_from_sq_dists(family: str, D: np.ndarray, theta):
    """Kernel values from squared distances; ``theta`` may be an array (adds a leading axis)."""
    theta = np.asarray(theta, dtype=float)
    t = theta.reshape(theta.shape + (1,) * D.ndim)
    if family == "gaussian":
        return np.exp(-D / (2.0 * t))
    if family == "cauchy":
        return 1.0 / (1.0 + t * D)
    raise ValueError(f"{family} kernel is not distance-based")


def gram_matrix(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Kernel matrix between the rows of X and Y (Y defaults to X)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    same = Y is None
    Y = X if same else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"feature lengths differ: {X.shape[1]} vs {Y.shape[1]}")
    _length(spec, X.shape[1])
    if spec.family == "linear":
        G = X @ Y.T / X.shape[1]
    else:
        D = sq_dists(X, Y)
        if same:
            D = 0.5 * (D + D.T)
            np.fill_diagonal(D, 0.0)
        G = kernel_from_sq_dists(spec.family, D, spec.theta)
    return 0.5 * (G + G.T) if same else G


class FeatureScaler:
    """Standardize columns with training statistics, dropping constant columns.

    With ``standardize=False`` every column is passed through unchanged.

    For the distance-based kernels the standardized vectors are further
    divided by sqrt(p) so that squared distances are per-feature averages and
    one bandwidth grid fits tables of any width. The linear kernel already
    divides by p and is left alone.
    """

    def __init__(self, standardize: bool = True, per_feature: bool = True):
        self.standardize = standardize
        self.per_feature = per_feature

    def fit(self, X, family: str) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.keep_ = self.scale_ > 1e-12 * np.maximum(1.0, np.abs(self.mean_))
        if not self.standardize:
            self.keep_[:] = True
        dropped = int((~self.keep_).sum())
        if dropped:
            warnings.warn(f"dropping {dropped} zero-variance feature column(s)", stacklevel=2)
        if not self.keep_.any():
            self.keep_[:] = True
            self.scale_ = np.ones_like(self.scale_)
        self.factor_ = 1.0
        if self.per_feature and family != "linear":
            self.factor_ = 1.0 / np.sqrt(self.keep_.sum())
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)[:, self.keep_]
        if self.standardize:
            X = (X - self.mean_[self.keep_]) / self.scale_[self.keep_]
        return X * self.factor_


def _factor(A: np.ndarray, tau2: float):
    try:
        return linalg.cho_factor(A, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    if tau2 > 0:
        for jitter in JITTERS:
            try:
                return linalg.cho_factor(A + jitter * np.eye(len(A)), lower=True, check_finite=False), jitter
            except linalg.LinAlgError:
                continue
    lam = float(np.linalg.eigvalsh(A).min())
    raise GPFitError(
        f"kernel matrix plus noise is not positive definite (min eigenvalue {lam:.3e}); increase tau2"
    )


@dataclass(eq=False)
class GPModel:
    spec: KernelSpec
    tau2: float
    X: np.ndarray
    y: np.ndarray
    factor: tuple
    jitter: float
    alpha: np.ndarray

    @property
    def L(self) -> np.ndarray:
        return np.tril(self.factor[0])

    def covariance(self) -> np.ndarray:
        """Sigma_SS + tau2 I (plus any jitter that was needed)."""
        n = len(self.y)
        return gram_matrix(self.spec, self.X) + (self.tau2 + self.jitter) * np.eye(n)

    def residual(self) -> float:
        L = self.L
        return float(np.abs(self.covariance() - L @ L.T).max())

    def to_json(self) -> dict:
        digest = hashlib.sha256(self.X.tobytes() + self.y.tobytes()).hexdigest()
        return {
            "kernel": self.spec.family,
            "theta": self.spec.theta,
            "p": self.X.shape[1],
            "tau2": self.tau2,
            "jitter": self.jitter,
            "n_train": len(self.y),
            "data_sha256": digest,
        }


def fit(spec: KernelSpec, tau2: float, X, y) -> GPModel:
    """Factor Sigma_SS + tau2 I for the training inputs.

    Jitter escalating from 1e-10 to 1e-4 is tried only when ``tau2 > 0``;
    a noiseless fit on a singular kernel matrix raises :class:`GPFitError`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) != len(X):
        raise ValueError(f"{len(X)} feature rows but {len(y)} responses")
    if len(y) < 1:
        raise ValueError("need at least one training point")
    if tau2 < 0:
        raise ValueError("tau2 must be non-negative")
    A = gram_matrix(spec, X) + tau2 * np.eye(len(y))
    factor, jitter = _factor(A, tau2)
    alpha = linalg.cho_solve(factor, y, check_finite=False)
    return GPModel(spec, float(tau2), X, y, factor, jitter, alpha)


def posterior_predict(model: GPModel, XT) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance of the latent function at the rows of XT."""
    XT = np.atleast_2d(np.asarray(XT, dtype=float))
    if XT.shape[1] != model.X.shape[1]:
        raise ValueError(f"test features have length {XT.shape[1]}, model expects {model.X.shape[1]}")
    K_ts = gram_matrix(model.spec, XT, model.X)
    mu = K_ts @ model.alpha
    V = linalg.solve_triangular(model.L, K_ts.T, lower=True, check_finite=False)
    cov = gram_matrix(model.spec, XT) - V.T @ V
    return mu, 0.5 * (cov + cov.T)


def predictive_variance(cov: np.ndarray) -> np.ndarray:
    """Diagonal of a posterior covariance with round-off negatives clamped to 0."""
    return np.clip(np.diag(cov), 0.0, None)


def log_marginal_likelihood(spec: KernelSpec, tau2: float, X, y) -> float:
    model = fit(spec, tau2, X, y)
    y = model.y
    return float(-0.5 * y @ model.alpha - np.log(np.diag(model.L)).sum() - 0.5 * len(y) * np.log(2 * np.pi))


def select_noise(spec: KernelSpec, X, y, grid=NOISE_GRID) -> float:
    """Noise variance maximizing the marginal likelihood over ``grid`` (first wins ties)."""
    scores = [log_marginal_likelihood(spec, t, X, y) for t in grid]
    return float(grid[int(np.argmax(scores))])


def fold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cv_scores(family: str, X, y, folds: int = 10, grid=None, tau2: float = DEFAULT_NOISE, seed=0) -> np.ndarray:
    """Mean out-of-fold RMSEP at every bandwidth of ``grid``.

    Responses are centred on each fold's training mean before fitting.
    """
    if family == "linear":
        raise ValueError("the linear kernel has no bandwidth to tune")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if n < folds:
        raise ValueError(f"{n} observations cannot be split into {folds} folds")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
    D = sq_dists(X, X)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    scores = np.zeros(len(grid))
    everyone = np.arange(n)
    for test in fold_indices(n, folds, seed):
        train = np.setdiff1d(everyone, test)
        offset = y[train].mean()
        K_ss = kernel_from_sq_dists(family, D[np.ix_(train, train)], grid)
        K_ts = kernel_from_sq_dists(family, D[np.ix_(test, train)], grid)
        K_ss += tau2 * np.eye(len(train))
        rhs = np.broadcast_to((y[train] - offset)[:, None], (len(grid), len(train), 1))
        alpha = np.linalg.solve(K_ss, rhs)
        pred = (K_ts @ alpha)[..., 0] + offset
        scores += np.sqrt(np.mean((pred - y[test]) ** 2, axis=1))
    return scores / folds


def cv_bandwidth(family: str, X, y, folds: int = 10, grid=None, tau2: float = DEFAULT_NOISE, seed=0) -> float:
    """Bandwidth with the smallest cross-validated RMSEP; near-ties go to the smaller value."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
    scores = cv_scores(family, X, y, folds, grid, tau2, seed)
    best = scores.min()
    tied = np.nonzero(scores <= best + 1e-12 * max(1.0, abs(best)))[0]
    return float(grid[tied].min())


def rmsep(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def r_squared(y_true, y_pred) -> float:
    """Squared Pearson correlation between truth and prediction.

    A constant prediction carries no linear association and scores 0.
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape or len(y_true) < 2:
        raise ValueError("need two equal-length vectors with at least two entries")
    dt = y_true - y_true.mean()
    dp = y_pred - y_pred.mean()
    st, sp = np.sqrt(dt @ dt), np.sqrt(dp @ dp)
    if st <= 1e-14 * max(1.0, np.abs(y_true).max()):
        raise ValueError("R^2 is undefined for a constant response")
    if sp <= 1e-14 * max(1.0, np.abs(y_pred).max()):
        return 0.0
    r = float(dt @ dp / (st * sp))
    return min(1.0, r * r)
