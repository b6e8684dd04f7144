"""Choosing a rank or a cluster count by thinning-based cross-validation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import clustering, pca
from . import thinning as T
from .rng import RandomStream

LOSS_KINDS = ("nll", "mse")


@dataclass(frozen=True)
class Method:
    """``naive``, ``single`` (one split at ``eps_train``) or ``multifold`` (``folds`` equal folds)."""

    kind: str
    eps_train: float | None = None
    folds: int | None = None

    def __post_init__(self):
        if self.kind == "single":
            if self.eps_train is None or not 0 < self.eps_train < 1:
                raise T.PlanError("single-fold thinning needs eps_train in (0, 1)")
        elif self.kind == "multifold":
            if self.folds is None or self.folds < 2:
                raise T.PlanError("multifold thinning needs at least two folds")
        elif self.kind != "naive":
            raise ValueError(f"unknown method {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Method":
        """``naive``, ``single:0.8`` or ``multifold:5``."""
        kind, _, arg = text.partition(":")
        if kind == "single":
            return cls("single", eps_train=float(arg))
        if kind == "multifold":
            return cls("multifold", folds=int(arg))
        if kind == "naive" and not arg:
            return cls("naive")
        raise ValueError(f"cannot parse method {text!r}")

    def __str__(self):
        if self.kind == "single":
            return f"single:{self.eps_train:g}"
        if self.kind == "multifold":
            return f"multifold:{self.folds}"
        return "naive"


@dataclass
class LossCurve:
    candidate_ks: np.ndarray
    per_fold_loss: np.ndarray  # folds x candidates
    method: str = ""
    kind: str = "nll"
    mean_loss: np.ndarray = field(init=False)
    selected_k: int = field(init=False)

    def __post_init__(self):
        self.candidate_ks = np.asarray(self.candidate_ks, dtype=int)
        self.per_fold_loss = np.atleast_2d(np.asarray(self.per_fold_loss, dtype=float))
        self.mean_loss = self.per_fold_loss.mean(axis=0)
        # argmin returns the first minimiser, i.e. the smallest K on ties
        self.selected_k = int(self.candidate_ks[int(np.argmin(self.mean_loss))])

    def rescaled(self):
        lo, hi = self.mean_loss.min(), self.mean_loss.max()
        if hi == lo:
            return np.zeros_like(self.mean_loss)
        return (self.mean_loss - lo) / (hi - lo)

    def is_monotone(self, slack: float = 1e-9) -> bool:
        """True when the mean curve never increases by more than ``slack`` (relative)."""
        m = self.mean_loss
        return bool(np.all(np.diff(m) <= slack * np.maximum(np.abs(m[:-1]), 1.0)))


def _splits(X, family, method: Method, stream):
    """Yield ``(X_train, X_test, eps_train, eps_test)`` per fold."""
    if method.kind == "naive":
        yield X, X, 1.0, 1.0
        return
    if method.kind == "single":
        plan = T.ThinPlan.two(method.eps_train)
        fs = T.thin_dataset(X, family, plan, "elementwise", stream)
        yield fs[0], fs[1], method.eps_train, 1.0 - method.eps_train
        return
    M = method.folds
    fs = T.thin_dataset(X, family, T.ThinPlan.equal(M), "elementwise", stream)
    for m in range(1, M + 1):
        yield T.fold_complement(fs, m), fs[m - 1], (M - 1) / M, 1.0 / M


def _pca_losses(X_train, X_test, trials, eps_train, eps_test, ks, kinds):
    r_train = int(round(eps_train * trials))
    r_test = int(round(eps_test * trials))
    fit = pca.fit_binomial_pca(X_train, r_train, max(ks))
    coef = pca.binomial_log_coef(X_test, r_test)
    return {
        kind: [pca.loss_binomial(X_test, r_test, fit.with_rank(k), kind, log_coef=coef) for k in ks]
        for kind in kinds
    }


def _cluster_losses(X_train, X_test, eps_train, eps_test, ks, kinds, restarts, stream):
    out = {kind: [] for kind in kinds}
    for k in ks:
        fit = clustering.fit_gamma_clusters(X_train, eps_train, k, restarts, stream.substream(k))
        for kind in kinds:
            out[kind].append(clustering.loss_gamma(X_test, fit, eps_test, eps_train, kind))
    return out


def cv_curves(X, family: T.Family, candidates, method: Method, task: str, stream: RandomStream, kinds=LOSS_KINDS, restarts: int = 10) -> dict:
    """Loss curves for several loss kinds from one set of fits.

    Returns ``{kind: LossCurve}``.  ``task`` is ``"pca"`` (binomial family)
    or ``"cluster"`` (gamma family).
    """
    ks = [int(k) for k in candidates]
    X = np.asarray(X)
    if not ks:
        raise ValueError("no candidate K")
    for kind in kinds:
        if kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {kind!r}")
    if task == "pca":
        if not isinstance(family, T.Binomial):
            raise T.UsageError("the pca task needs a binomial family")
        if min(ks) < 1 or max(ks) > min(X.shape):
            raise ValueError(f"candidate ranks must lie in 1..{min(X.shape)}")
    elif task == "cluster":
        if not isinstance(family, T.Gamma):
            raise T.UsageError("the cluster task needs a gamma family")
        if min(ks) < 1 or max(ks) > X.shape[0]:
            raise ValueError(f"candidate cluster counts must lie in 1..{X.shape[0]}")
    else:
        raise ValueError(f"unknown task {task!r}")
    per_fold = {kind: [] for kind in kinds}
    for m, (X_train, X_test, e_tr, e_te) in enumerate(_splits(X, family, method, stream.substream(0))):
        if task == "pca":
            losses = _pca_losses(X_train, X_test, family.trials, e_tr, e_te, ks, kinds)
        else:
            losses = _cluster_losses(X_train, X_test, e_tr, e_te, ks, kinds, restarts, stream.substream(1).substream(m))
        for kind in kinds:
            per_fold[kind].append(losses[kind])
    return {kind: LossCurve(ks, per_fold[kind], str(method), kind) for kind in kinds}


def cv_select_k(X, family: T.Family, candidates, method: Method, kind: str, task: str, stream: RandomStream, restarts: int = 10) -> LossCurve:
    """Loss curve over candidate K and the selected (minimising) K."""
    if isinstance(method, str):
        method = Method.parse(method)
    return cv_curves(X, family, candidates, method, task, stream, kinds=(kind,), restarts=restarts)[kind]
