"""Binomial principal components on pseudo-count log-odds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

PSEUDO_COUNT = 0.001


@dataclass(frozen=True)
class PcaFit:
    """SVD of the training logit matrix, truncated at ``rank``."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    rank: int

    def logits(self, rank: int | None = None):
        k = self.rank if rank is None else rank
        return (self.U[:, :k] * self.D[:k]) @ self.V[:, :k].T

    @property
    def probs(self):
        return special.expit(self.logits())

    def with_rank(self, rank: int) -> "PcaFit":
        _check_rank(rank, len(self.D))
        return PcaFit(self.U, self.D, self.V, rank)


def _check_rank(K, full):
    if not 1 <= K <= full:
        raise ValueError(f"rank {K} outside 1..{full}")


def pseudo_logit(X, trials):
    X = np.asarray(X, dtype=float)
    return special.logit((X + PSEUDO_COUNT) / (trials + 2 * PSEUDO_COUNT))


def fit_binomial_pca(X_train, trials_train: int, K: int) -> PcaFit:
    X_train = np.asarray(X_train)
    if np.any(X_train < 0) or np.any(X_train > trials_train):
        raise ValueError(f"training counts must lie in [0, {trials_train}]")
    _check_rank(K, min(X_train.shape))
    U, D, Vt = np.linalg.svd(pseudo_logit(X_train, trials_train), full_matrices=False)
    return PcaFit(U, D, Vt.T, K)


def binomial_log_coef(X_test, trials_test):
    X_test = np.asarray(X_test, dtype=float)
    return special.gammaln(trials_test + 1.0) - special.gammaln(X_test + 1.0) - special.gammaln(trials_test - X_test + 1.0)


def loss_binomial(X_test, trials_test: int, fit: PcaFit, kind: str = "nll", log_coef=None) -> float:
    """Test loss of the rank-K probabilities: negative log-likelihood or MSE.

    ``log_coef`` may carry precomputed log binomial coefficients for
    ``X_test`` when scoring many ranks against one test matrix.
    """
    X_test = np.asarray(X_test, dtype=float)
    if X_test.shape != fit.U.shape[:1] + fit.V.shape[:1]:
        raise ValueError("test matrix shape does not match the fit")
    if np.any(X_test < 0) or np.any(X_test > trials_test):
        raise ValueError(f"test counts must lie in [0, {trials_test}]")
    theta = fit.logits()
    if kind == "mse":
        return float(np.mean((X_test - trials_test * special.expit(theta)) ** 2))
    if kind != "nll":
        raise ValueError(f"unknown loss {kind!r}")
    if log_coef is None:
        log_coef = binomial_log_coef(X_test, trials_test)
    # log p = -log1p(exp(-theta)), log(1-p) = -log1p(exp(theta))
    ll = log_coef - X_test * np.logaddexp(0.0, -theta) - (trials_test - X_test) * np.logaddexp(0.0, theta)
    return float(-ll.sum())
