"""Rank-K reconstruction error curves and the preprocessing feeding them."""
from __future__ import annotations

import numpy as np


def sse_curve(Y, K_max: int) -> dict:
    """Squared reconstruction error of the rank-K truncated SVD, K = 1..K_max.

    Alongside the direct residual norms, ``identity`` holds
    ``||Y||_F^2 - sum_{j<=K} D_j^2`` which equals ``sse`` in exact arithmetic.
    """
    Y = np.asarray(Y, dtype=float)
    if not 1 <= K_max <= min(Y.shape):
        raise ValueError(f"K_max must lie in 1..{min(Y.shape)}")
    U, D, Vt = np.linalg.svd(Y, full_matrices=False)
    sse = np.empty(K_max)
    approx = np.zeros_like(Y)
    for k in range(K_max):
        approx += D[k] * np.outer(U[:, k], Vt[k])
        sse[k] = np.sum((Y - approx) ** 2)
    identity = np.sum(Y**2) - np.cumsum(D[:K_max] ** 2)
    return {"K": np.arange(1, K_max + 1), "sse": sse, "identity": identity, "singular_values": D[:K_max]}


def heldout_sse_curve(Y_train, Y_test, K_max: int) -> np.ndarray:
    """``||Y_test - rank-K SVD of Y_train||_F^2`` for K = 1..K_max."""
    Y_train = np.asarray(Y_train, dtype=float)
    Y_test = np.asarray(Y_test, dtype=float)
    if Y_train.shape != Y_test.shape:
        raise ValueError("train and test matrices differ in shape")
    U, D, Vt = np.linalg.svd(Y_train, full_matrices=False)
    out = np.empty(K_max)
    approx = np.zeros_like(Y_train)
    for k in range(K_max):
        approx += D[k] * np.outer(U[:, k], Vt[k])
        out[k] = np.sum((Y_test - approx) ** 2)
    return out


def standardize_columns(Y):
    """Centre columns and scale to unit sample SD; constant columns become zero.

    Returns ``(Z, flagged)`` where ``flagged`` lists zero-variance columns.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] < 2:
        raise ValueError("need at least two rows")
    centred = Y - Y.mean(axis=0)
    sd = centred.std(axis=0, ddof=1)
    flagged = np.flatnonzero(~(sd > 0))
    Z = np.divide(centred, sd, out=np.zeros_like(centred), where=sd > 0)
    # second pass removes the residual rounding left by the first
    Z[:, sd > 0] -= Z[:, sd > 0].mean(axis=0)
    return Z, flagged


def log_normalize(counts, scale: float = 1e4):
    """``log(x_ij / rowsum_i * scale + 1)``; all-zero rows stay zero."""
    X = np.asarray(counts, dtype=float)
    tot = X.sum(axis=1, keepdims=True)
    return np.log1p(np.divide(X, tot, out=np.zeros_like(X), where=tot > 0) * scale)
