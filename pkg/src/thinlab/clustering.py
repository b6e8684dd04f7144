"""k-means and per-cluster gamma fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .rng import RandomStream

SHAPE_CAP = 1e6
NEWTON_STEPS = 20


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray  # 0-based
    centers: np.ndarray
    wcss: float


def _sq_dists(X, C, xx=None):
    xx = np.einsum("ij,ij->i", X, X) if xx is None else xx
    d = xx[:, None] - 2.0 * X @ C.T + np.einsum("ij,ij->i", C, C)[None, :]
    return np.maximum(d, 0.0)


def _plusplus(X, K, rng, xx):
    """Greedy k-means++: each step draws several D^2-weighted candidates and
    keeps the one that lowers the potential most."""
    n = X.shape[0]
    trials = 2 + int(np.log(K))
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1], xx)[:, 0]
    for k in range(1, K):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            picks = np.searchsorted(np.cumsum(closest), rng.random(trials) * total, side="right")
            picks = np.minimum(picks, n - 1)
            cand = np.minimum(closest[None, :], _sq_dists(X, X[picks], xx).T)
            best = int(np.argmin(cand.sum(axis=1)))
            idx = picks[best]
        centers[k] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[k : k + 1], xx)[:, 0])
    return centers


def _group_sums(X, labels, K):
    onehot = np.zeros((K, X.shape[0]))
    onehot[labels, np.arange(X.shape[0])] = 1.0
    return onehot @ X


def _lloyd(X, centers, max_iter, xx):
    K = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(X, centers, xx)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=K)
        sums = _group_sums(X, labels, K)
        empty = counts == 0
        centers = np.where(empty[:, None], centers, sums / np.maximum(counts, 1)[:, None])
        if empty.any():
            # move each empty centre onto the point worst served by its centre
            far = d[np.arange(len(labels)), labels]
            for k in np.flatnonzero(empty):
                i = int(np.argmax(far))
                centers[k] = X[i]
                far[i] = -1.0
    d = _sq_dists(X, centers, xx)
    labels = np.argmin(d, axis=1)
    wcss = float(d[np.arange(len(labels)), labels].sum())
    return labels, centers, wcss


def kmeans(X, K: int, restarts: int = 10, stream: RandomStream | None = None, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` by WCSS.

    Restart ``r`` draws from ``stream.substream(r)``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K={K} must lie in 1..{n}")
    stream = RandomStream(0) if stream is None else stream
    xx = np.einsum("ij,ij->i", X, X)
    best = None
    for r in range(restarts):
        rng = stream.substream(r).generator()
        labels, centers, wcss = _lloyd(X, _plusplus(X, K, rng, xx), max_iter, xx)
        if best is None or wcss < best.wcss:
            best = KMeansResult(labels, centers, wcss)
    return best


def gamma_mle(X, labels=None, K: int | None = None):
    """Shape/rate maximum-likelihood estimates per (group, column).

    Returns ``shape, rate, capped, counts``; groups are ``labels`` (0-based)
    or a single group when ``labels`` is None.  Zero-variance cells cap the
    shape at ``SHAPE_CAP`` and are flagged in ``capped``.
    """
    X = np.asarray(X, dtype=float)
    if np.any(X <= 0):
        raise ValueError("gamma fits need strictly positive data")
    if labels is None:
        labels = np.zeros(X.shape[0], dtype=int)
        K = 1
    K = int(labels.max()) + 1 if K is None else K
    counts = np.bincount(labels, minlength=K).astype(float)
    sums = _group_sums(X, labels, K)
    logs = _group_sums(np.log(X), labels, K)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = sums / counts[:, None]
        s = np.log(mean) - logs / counts[:, None]
    degenerate = ~(s > 1e-12)
    s = np.where(degenerate, 1.0, s)
    shape = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(NEWTON_STEPS):
        f = np.log(shape) - special.digamma(shape) - s
        fp = 1.0 / shape - special.polygamma(1, shape)
        step = f / fp
        new = shape - step
        new = np.where(new > 0, new, shape / 2.0)
        done = np.abs(new - shape) <= 1e-12 * shape
        shape = new
        if done.all():
            break
    capped = degenerate | (shape > SHAPE_CAP)
    shape = np.where(capped, SHAPE_CAP, shape)
    rate = shape / mean
    return shape, rate, capped, counts


@dataclass(frozen=True)
class ClusterFit:
    """k-means labels (0-based) plus per-cluster, per-column gamma parameters."""

    labels: np.ndarray
    shape: np.ndarray
    rate: np.ndarray
    empty: np.ndarray
    capped: np.ndarray

    @property
    def K(self):
        return self.shape.shape[0]

    @property
    def means(self):
        return self.shape / self.rate

    def relabel(self, perm) -> "ClusterFit":
        """Rename cluster ``k`` to ``perm[k]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return ClusterFit(perm[self.labels], self.shape[inv], self.rate[inv], self.empty[inv], self.capped[inv])


def fit_gamma_clusters(X_train, eps_train: float, K: int, restarts: int = 10, stream: RandomStream | None = None, labels=None) -> ClusterFit:
    """Cluster the training data and fit a gamma per cluster and column.

    ``eps_train`` is recorded by the caller for loss rescaling; the fit itself
    is scale free.  Empty clusters take the pooled estimate.
    """
    X_train = np.asarray(X_train, dtype=float)
    if np.any(X_train <= 0):
        raise ValueError("gamma clustering needs strictly positive data")
    if labels is None:
        labels = kmeans(X_train, K, restarts, stream).labels
    shape, rate, capped, counts = gamma_mle(X_train, labels, K)
    empty = counts == 0
    if empty.any():
        ps, pr, pc, _ = gamma_mle(X_train)
        shape[empty], rate[empty], capped[empty] = ps[0], pr[0], pc[0]
    return ClusterFit(np.asarray(labels), shape, rate, empty, capped)


def loss_gamma(X_test, fit: ClusterFit, eps_test: float, eps_train: float, kind: str = "nll") -> float:
    """Test loss with shapes (or means) rescaled by ``eps_test / eps_train``."""
    X_test = np.asarray(X_test, dtype=float)
    if X_test.shape[0] != fit.labels.shape[0]:
        raise ValueError("assignments do not cover the test rows")
    if np.any(X_test <= 0):
        raise ValueError("gamma loss needs strictly positive test data")
    ratio = eps_test / eps_train
    shape = fit.shape[fit.labels] * ratio
    rate = fit.rate[fit.labels]
    if kind == "mse":
        return float(np.mean((X_test - shape / rate) ** 2))
    if kind != "nll":
        raise ValueError(f"unknown loss {kind!r}")
    ll = shape * np.log(rate) - special.gammaln(shape) + (shape - 1.0) * np.log(X_test) - rate * X_test
    return float(-ll.sum())
