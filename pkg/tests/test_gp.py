import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sect import gp

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


# --- kernels ------------------------------------------------------------------

@pytest.mark.parametrize("theta", [0.1, 1.0, 7.5])
def test_kernel_at_zero_distance(theta):
    u = np.array([0.3, -1.0, 2.0])
    assert gp.kernel_eval(gp.KernelSpec("gaussian", theta), u, u) == 1.0
    assert gp.kernel_eval(gp.KernelSpec("cauchy", theta), u, u) == 1.0


def test_linear_kernel_ones():
    p = 17
    assert gp.kernel_eval(gp.KernelSpec("linear", p=p), np.ones(p), np.ones(p)) == 1.0


def test_kernel_values():
    u, v = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    assert gp.kernel_eval(gp.KernelSpec("gaussian", 2.0), u, v) == pytest.approx(math.exp(-0.5))
    assert gp.kernel_eval(gp.KernelSpec("cauchy", 2.0), u, v) == pytest.approx(0.2)
    assert gp.kernel_eval(gp.KernelSpec("linear"), [1, 2], [3, 4]) == pytest.approx(5.5)


def test_kernel_spec_validation():
    with pytest.raises(ValueError, match="unknown"):
        gp.KernelSpec("matern", 1.0)
    with pytest.raises(ValueError, match="positive"):
        gp.KernelSpec("gaussian", 0.0)
    with pytest.raises(ValueError, match="positive"):
        gp.KernelSpec("cauchy")
    with pytest.raises(ValueError, match="length"):
        gp.kernel_eval(gp.KernelSpec("linear", p=3), [1, 2], [1, 2])
    with pytest.raises(ValueError, match="differ"):
        gp.kernel_eval(gp.KernelSpec("linear"), [1, 2], [1, 2, 3])


def test_gram_examples():
    spec = gp.KernelSpec("gaussian", 1.0)
    assert gp.gram_matrix(spec, [[1.0, 2.0]]).shape == (1, 1)
    X = np.array([[0.0, 1.0], [2.0, 0.0], [0.0, 1.0]])
    G = gp.gram_matrix(spec, X)
    assert np.array_equal(G[0], G[2]) and np.array_equal(G[:, 0], G[:, 2])
    X = np.random.default_rng(0).normal(size=(5, 3))
    assert np.linalg.eigvalsh(gp.gram_matrix(spec, X)).min() >= -1e-10


def test_gram_matches_pointwise_kernel():
    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(6, 3))
    for spec in (gp.KernelSpec("linear"), gp.KernelSpec("gaussian", 0.7), gp.KernelSpec("cauchy", 1.3)):
        G = gp.gram_matrix(spec, X, Y)
        ref = np.array([[gp.kernel_eval(spec, x, y) for y in Y] for x in X])
        assert np.allclose(G, ref, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 4)), elements=finite),
       st.sampled_from(gp.FAMILIES), st.floats(0.05, 10))
def test_gram_symmetric_psd(X, family, theta):
    G = gp.gram_matrix(gp.KernelSpec(family, theta), X)
    assert np.array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() >= -1e-8


# --- fitting ------------------------------------------------------------------

def test_identity_gram_factor():
    p = 4
    X = math.sqrt(p) * np.eye(p)  # orthogonal rows, unit self-similarity
    model = gp.fit(gp.KernelSpec("linear", p=p), 0.1, X, np.zeros(p))
    assert np.allclose(model.L @ model.L.T, 1.1 * np.eye(p), atol=1e-14)
    assert np.allclose(model.L, math.sqrt(1.1) * np.eye(p))


def test_singular_noiseless_fit_raises():
    X = np.array([[1.0, 2.0], [1.0, 2.0]])
    with pytest.raises(gp.GPFitError, match="min eigenvalue"):
        gp.fit(gp.KernelSpec("gaussian", 1.0), 0.0, X, [1.0, 2.0])


def test_jitter_rescues_tiny_noise():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    model = gp.fit(gp.KernelSpec("gaussian", 1.0), 1e-18, X, [1.0, 1.0, 0.0])
    assert model.jitter > 0


def test_recomposition_residual():
    X = np.random.default_rng(2).normal(size=(30, 5))
    for spec in (gp.KernelSpec("linear"), gp.KernelSpec("gaussian", 2.0), gp.KernelSpec("cauchy", 0.5)):
        assert gp.fit(spec, 0.01, X, np.ones(30)).residual() <= 1e-8


def test_fit_input_errors():
    spec = gp.KernelSpec("linear")
    with pytest.raises(ValueError, match="responses"):
        gp.fit(spec, 0.1, np.ones((3, 2)), [1, 2])
    with pytest.raises(ValueError, match="non-negative"):
        gp.fit(spec, -1.0, np.ones((3, 2)), [1, 2, 3])
    with pytest.raises(ValueError, match="one training"):
        gp.fit(spec, 0.1, np.ones((0, 2)), [])


# --- prediction ---------------------------------------------------------------

def test_interpolation_limit():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(12, 3)), rng.normal(size=12)
    model = gp.fit(gp.KernelSpec("gaussian", 1.0), 1e-12, X, y)
    mu, _ = gp.posterior_predict(model, X)
    assert np.abs(mu - y).max() <= 1e-6


def test_zero_response():
    rng = np.random.default_rng(4)
    X, XT = rng.normal(size=(8, 2)), rng.normal(size=(3, 2))
    spec = gp.KernelSpec("cauchy", 1.0)
    model = gp.fit(spec, 0.2, X, np.zeros(8))
    mu, cov = gp.posterior_predict(model, XT)
    assert np.array_equal(mu, np.zeros(3))
    A = gp.gram_matrix(spec, X) + 0.2 * np.eye(8)
    K_ts = gp.gram_matrix(spec, XT, X)
    expected = gp.gram_matrix(spec, XT) - K_ts @ np.linalg.solve(A, K_ts.T)
    assert np.allclose(cov, expected, atol=1e-12)


def test_scalar_posterior_example():
    u, v = np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]])  # squared distance 2
    model = gp.fit(gp.KernelSpec("gaussian", 2.0), 0.5, u, [1.0])
    mu, cov = gp.posterior_predict(model, v)
    assert mu[0] == pytest.approx(math.exp(-0.5) / 1.5, abs=1e-15)
    assert mu[0] == pytest.approx(0.4044, abs=1e-4)
    assert cov[0, 0] == pytest.approx(1 - math.exp(-1.0) / 1.5, abs=1e-15)


def test_linear_kernel_is_ridge():
    rng = np.random.default_rng(5)
    n, p, tau2 = 20, 6, 0.3
    X, XT, y = rng.normal(size=(n, p)), rng.normal(size=(4, p)), rng.normal(size=n)
    mu, _ = gp.posterior_predict(gp.fit(gp.KernelSpec("linear"), tau2, X, y), XT)
    beta = np.linalg.solve(X.T @ X + tau2 * p * np.eye(p), X.T @ y)
    assert np.abs(mu - XT @ beta).max() <= 1e-8


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(gp.FAMILIES), st.floats(0.1, 5), st.floats(1e-3, 1))
def test_posterior_variance_below_prior(seed, family, theta, tau2):
    rng = np.random.default_rng(seed)
    X, XT = rng.normal(size=(10, 3)), rng.normal(size=(5, 3))
    spec = gp.KernelSpec(family, theta)
    _, cov = gp.posterior_predict(gp.fit(spec, tau2, X, rng.normal(size=10)), XT)
    assert np.all(np.diag(cov) <= np.diag(gp.gram_matrix(spec, XT)) + 1e-8)
    assert np.all(gp.predictive_variance(cov) >= 0)


def test_duplicate_training_point_is_redundant():
    rng = np.random.default_rng(6)
    X, XT = rng.normal(size=(10, 3)), rng.normal(size=(4, 3))
    f = np.sin(X.sum(axis=1))
    spec = gp.KernelSpec("gaussian", 1.5)
    mu1, _ = gp.posterior_predict(gp.fit(spec, 1e-10, X, f), XT)
    mu2, _ = gp.posterior_predict(gp.fit(spec, 1e-10, np.vstack([X, X[:1]]), np.append(f, f[0])), XT)
    assert np.abs(mu1 - mu2).max() <= 1e-6


def test_predict_dimension_mismatch():
    model = gp.fit(gp.KernelSpec("linear"), 0.1, np.eye(3), [1, 2, 3])
    with pytest.raises(ValueError):
        gp.posterior_predict(model, np.ones((1, 2)))


def test_model_summary_has_digest():
    model = gp.fit(gp.KernelSpec("cauchy", 2.0), 0.1, np.eye(3), [1, 2, 3])
    info = model.to_json()
    assert info["kernel"] == "cauchy" and info["theta"] == 2.0 and len(info["data_sha256"]) == 64


# --- noise and bandwidth selection ---------------------------------------------

def test_default_grid():
    g = gp.default_grid()
    assert len(g) == 100 and g[0] == 0.1 and g[-1] == 10.0 and g[22] == 2.3


def test_cv_constant_response_picks_smallest():
    X = np.random.default_rng(7).normal(size=(20, 2))
    assert gp.cv_bandwidth("gaussian", X, np.full(20, 3.0)) == 0.1


def test_cv_single_point_grid():
    rng = np.random.default_rng(8)
    X, y = rng.normal(size=(20, 2)), rng.normal(size=20)
    assert gp.cv_bandwidth("cauchy", X, y, grid=[0.7]) == 0.7


@pytest.mark.parametrize("seed", range(5))
def test_cv_recovers_generating_bandwidth(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    K = gp.gram_matrix(gp.KernelSpec("gaussian", 2.0), X)
    y = np.linalg.cholesky(K + 1e-10 * np.eye(60)) @ rng.normal(size=60)
    assert 1.0 <= gp.cv_bandwidth("gaussian", X, y, tau2=1e-6, seed=seed) <= 4.0


def test_cv_scores_match_direct_fits():
    rng = np.random.default_rng(9)
    X, y = rng.normal(size=(15, 2)), rng.normal(size=15)
    grid = [0.5, 2.0]
    scores = gp.cv_scores("cauchy", X, y, folds=3, grid=grid, tau2=0.1, seed=4)
    for theta, score in zip(grid, scores):
        errs = []
        for test in gp.fold_indices(15, 3, 4):
            train = np.setdiff1d(np.arange(15), test)
            off = y[train].mean()
            model = gp.fit(gp.KernelSpec("cauchy", theta), 0.1, X[train], y[train] - off)
            mu, _ = gp.posterior_predict(model, X[test])
            errs.append(gp.rmsep(y[test], mu + off))
        assert score == pytest.approx(np.mean(errs), rel=1e-10)


def test_cv_errors():
    X = np.ones((5, 2))
    with pytest.raises(ValueError, match="no bandwidth"):
        gp.cv_bandwidth("linear", X, np.arange(5.0))
    with pytest.raises(ValueError, match="folds"):
        gp.cv_bandwidth("gaussian", X, np.arange(5.0), folds=10)


def test_fold_indices_partition():
    folds = gp.fold_indices(23, 10, 1)
    assert sorted(np.concatenate(folds).tolist()) == list(range(23))
    assert {len(f) for f in folds} == {2, 3}


def test_select_noise_prefers_true_level():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(80, 1))
    y = np.sin(2 * X[:, 0]) + rng.normal(scale=1.0, size=80)
    assert gp.select_noise(gp.KernelSpec("gaussian", 0.5), X, y) == 1.0


# --- scores --------------------------------------------------------------------

def test_score_examples():
    y = np.array([-1.0, 0.0, 1.0, 2.0])
    y = (y - y.mean()) / y.std()
    assert gp.r_squared(y, y) == 1.0 and gp.rmsep(y, y) == 0.0
    assert gp.r_squared(y, -y) == pytest.approx(1.0)
    assert gp.rmsep(y, -y) == pytest.approx(2.0)
    assert gp.r_squared(y, 3.0 + 0.5 * y) == pytest.approx(1.0)


def test_score_edge_cases():
    assert gp.r_squared([1.0, 2.0, 3.0], [5.0, 5.0, 5.0]) == 0.0
    with pytest.raises(ValueError, match="constant"):
        gp.r_squared([1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        gp.rmsep([1.0], [1.0, 2.0])


# --- feature scaling -------------------------------------------------------------

def test_scaler_drops_constant_columns():
    X = np.column_stack([np.arange(5.0), np.full(5, 2.0), np.arange(5.0) ** 2])
    with pytest.warns(UserWarning, match="1 zero-variance"):
        s = gp.FeatureScaler().fit(X, "gaussian")
    Z = s.transform(X)
    assert Z.shape == (5, 2)
    assert np.allclose((Z * math.sqrt(2)).mean(axis=0), 0) and np.allclose((Z * math.sqrt(2)).std(axis=0), 1)
    L = gp.FeatureScaler().fit(X[:, [0, 2]], "linear").transform(X[:, [0, 2]])
    assert np.allclose(L.std(axis=0), 1)


def test_scaler_uses_training_statistics():
    X = np.array([[0.0], [2.0]])
    s = gp.FeatureScaler(per_feature=False).fit(X, "cauchy")
    assert s.transform(np.array([[4.0]])).tolist() == [[3.0]]
