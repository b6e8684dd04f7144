"""Forward stepwise least squares by AIC, and OLS refits with t-intervals."""
from __future__ import annotations

import numpy as np
from scipy import stats


def _design(Z, cols):
    return np.column_stack([np.ones(Z.shape[0]), Z[:, list(cols)]])


def _rss(A, y):
    """Residual sum of squares, or None when ``A`` is rank deficient."""
    coef, res, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        return None
    r = y - A @ coef
    return float(r @ r)


def aic(rss: float, n: int, edf: int) -> float:
    """``n log(RSS / n) + 2 edf``, the least-squares AIC up to a constant."""
    if rss <= 0:
        return -np.inf
    return n * np.log(rss / n) + 2.0 * edf


def forward_stepwise(Z, X, max_terms: int | None = None) -> list[int]:
    """Greedy forward selection from the intercept-only model.

    At each step the candidate whose addition gives the lowest AIC is added;
    selection stops when no addition lowers AIC, when ``max_terms`` columns
    are in, or when another column would leave no residual degrees of
    freedom.  Candidates that make the design singular are skipped.
    Returns 0-based column indices in order of entry.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(X, dtype=float)
    n, p = Z.shape
    if y.shape != (n,):
        raise ValueError("response length does not match the design")
    max_terms = p if max_terms is None else min(int(max_terms), p)
    chosen: list[int] = []
    current = aic(float(np.sum((y - y.mean()) ** 2)), n, 1)
    while len(chosen) < max_terms and len(chosen) + 2 < n:
        best, best_aic = None, current
        for j in range(p):
            if j in chosen:
                continue
            rss = _rss(_design(Z, chosen + [j]), y)
            if rss is None:
                continue
            a = aic(rss, n, len(chosen) + 2)
            if a < best_aic:
                best, best_aic = j, a
        if best is None:
            break
        chosen.append(best)
        current = best_aic
    return chosen


def ols_intervals(Z, X, cols, level: float = 0.95):
    """OLS fit of ``X`` on an intercept plus ``Z[:, cols]``.

    Returns ``(coef, lower, upper)`` for the ``cols`` coefficients, or None
    when the design is singular or leaves no residual degrees of freedom.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(X, dtype=float)
    A = _design(Z, cols)
    n, k = A.shape
    df = n - k
    if df < 1:
        return None
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < k:
        return None
    r = y - A @ coef
    sigma2 = float(r @ r) / df
    cov = sigma2 * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.diag(cov))
    q = stats.t.ppf(0.5 + level / 2, df)
    return coef[1:], coef[1:] - q * se[1:], coef[1:] + q * se[1:]
