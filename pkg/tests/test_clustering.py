import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from thinlab import clustering as C
from thinlab import samplers as S
from thinlab.rng import RandomStream


def test_identical_points_single_cluster():
    res = C.kmeans(np.ones((10, 3)), 1, 3, RandomStream(0))
    assert res.wcss == 0.0


def test_separated_blobs():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(size=(50, 2)), rng.normal(size=(50, 2)) + 100])
    labels = C.kmeans(X, 2, 10, RandomStream(1)).labels
    truth = np.repeat([0, 1], 50)
    assert np.all(labels == truth) or np.all(labels == 1 - truth)


def test_k_greater_than_n():
    with pytest.raises(ValueError):
        C.kmeans(np.ones((3, 2)), 4, 1, RandomStream(0))


def _partition_optimum(X):
    best = np.inf
    n = X.shape[0]
    for side in itertools.product([False, True], repeat=n - 1):
        mask = np.array((True,) + side)
        if mask.all():
            continue
        best = min(best, sum(float(np.sum((X[g] - X[g].mean(0)) ** 2)) for g in (mask, ~mask)))
    return best


def test_kmeans_reaches_partition_optimum():
    hits = 0
    for seed in range(100):
        X = np.random.default_rng(100 + seed).normal(size=(6, 2))
        hits += C.kmeans(X, 2, 10, RandomStream(seed)).wcss <= _partition_optimum(X) + 1e-9
    assert hits >= 95


def test_kmeans_deterministic():
    X = np.random.default_rng(5).normal(size=(80, 3))
    a = C.kmeans(X, 4, 5, RandomStream(7))
    b = C.kmeans(X, 4, 5, RandomStream(7))
    assert np.array_equal(a.labels, b.labels) and a.wcss == b.wcss


def test_gamma_mle_single_cluster():
    X = S.sample(S.Gamma(20.0, 5.0), RandomStream(8), (5000, 1))
    fit = C.fit_gamma_clusters(X, 1.0, 1, labels=np.zeros(5000, dtype=int))
    assert abs(fit.shape[0, 0] - 20) < 1.0
    assert abs(fit.rate[0, 0] - 5) < 0.3


def test_gamma_mle_matches_scipy():
    X = S.sample(S.Gamma(3.0, 2.0), RandomStream(9), (400, 1))
    shape, rate, capped, _ = C.gamma_mle(X)
    a, _, scale = stats.gamma.fit(X[:, 0], floc=0)
    assert shape[0, 0] == pytest.approx(a, rel=1e-4)
    assert rate[0, 0] == pytest.approx(1 / scale, rel=1e-4)
    assert not capped.any()


def test_constant_column_caps_shape():
    X = np.column_stack([np.full(20, 2.0), np.linspace(1, 3, 20)])
    shape, rate, capped, _ = C.gamma_mle(X)
    assert capped[0, 0] and shape[0, 0] == C.SHAPE_CAP
    assert not capped[0, 1]
    assert rate[0, 0] == pytest.approx(C.SHAPE_CAP / 2.0)


@given(st.integers(0, 2**32 - 1))
def test_estimates_invariant_to_row_order(seed):
    rng = np.random.default_rng(seed)
    X = rng.gamma(2.0, 1.0, size=(30, 3))
    labels = rng.integers(0, 3, size=30)
    perm = rng.permutation(30)
    a = C.fit_gamma_clusters(X, 0.5, 3, labels=labels)
    b = C.fit_gamma_clusters(X[perm], 0.5, 3, labels=labels[perm])
    np.testing.assert_allclose(a.shape, b.shape, rtol=1e-10)
    np.testing.assert_allclose(a.rate, b.rate, rtol=1e-10)


def test_empty_cluster_uses_pooled_estimate():
    X = np.random.default_rng(10).gamma(2.0, 1.0, size=(20, 2))
    fit = C.fit_gamma_clusters(X, 1.0, 3, labels=np.zeros(20, dtype=int))
    assert fit.empty.tolist() == [False, True, True]
    np.testing.assert_allclose(fit.shape[1], fit.shape[0])
    assert np.all(fit.shape > 0) and np.all(fit.rate > 0)


def _gamma_nll(X, shape, rate):
    return -sum(stats.gamma.logpdf(X[i, j], shape[i, j], scale=1 / rate[i, j]) for i in range(X.shape[0]) for j in range(X.shape[1]))


def test_loss_gamma_oracle_and_scaling():
    rng = np.random.default_rng(11)
    X_train = rng.gamma(3.0, 1.0, size=(2, 2))
    labels = np.array([0, 1])
    fit = C.fit_gamma_clusters(np.vstack([X_train, X_train * 1.1]), 0.6, 2, labels=np.array([0, 1, 0, 1]))
    X_test = rng.gamma(2.0, 1.0, size=(2, 2))
    sub = C.ClusterFit(labels, fit.shape, fit.rate, fit.empty, fit.capped)
    oracle = _gamma_nll(X_test, fit.shape[labels] * 0.4 / 0.6, fit.rate[labels])
    assert C.loss_gamma(X_test, sub, 0.4, 0.6, "nll") == pytest.approx(oracle, rel=1e-10)
    # equal weights use the shape unrescaled
    oracle = _gamma_nll(X_test, fit.shape[labels], fit.rate[labels])
    assert C.loss_gamma(X_test, sub, 0.5, 0.5, "nll") == pytest.approx(oracle, rel=1e-10)


def test_loss_gamma_mse_zero_at_scaled_means():
    X = np.random.default_rng(12).gamma(3.0, 1.0, size=(6, 2))
    labels = np.array([0, 0, 0, 1, 1, 1])
    fit = C.fit_gamma_clusters(X, 0.8, 2, labels=labels)
    X_test = 0.25 * fit.means[labels]
    assert C.loss_gamma(X_test, fit, 0.2, 0.8, "mse") == pytest.approx(0.0, abs=1e-24)


def test_loss_relabel_invariance():
    X = np.random.default_rng(13).gamma(3.0, 1.0, size=(12, 3))
    fit = C.fit_gamma_clusters(X, 0.5, 3, labels=np.arange(12) % 3)
    X_test = np.random.default_rng(14).gamma(3.0, 1.0, size=(12, 3))
    for kind in ("nll", "mse"):
        a = C.loss_gamma(X_test, fit, 0.5, 0.5, kind)
        b = C.loss_gamma(X_test, fit.relabel(np.array([2, 0, 1])), 0.5, 0.5, kind)
        assert a == pytest.approx(b, rel=1e-14)


def test_loss_rejects_nonpositive():
    X = np.ones((3, 2)) * 2
    fit = C.fit_gamma_clusters(X + np.arange(3)[:, None], 1.0, 1, labels=np.zeros(3, dtype=int))
    with pytest.raises(ValueError):
        C.loss_gamma(np.zeros((3, 2)), fit, 1.0, 1.0)
    with pytest.raises(ValueError):
        C.fit_gamma_clusters(np.zeros((3, 2)), 1.0, 1)
