"""Nuisance misspecification and information allocation diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import samplers as S
from . import thinning as T
from .rng import RandomStream


class ScopeError(ValueError):
    """The requested parameter is fixed at thinning time, so no allocation claim applies."""


@dataclass(frozen=True)
class MismatchSpec:
    """Thinning with an assumed nuisance value instead of the true one.

    ``true`` holds the data-generating parameters: ``(mean, var)`` for
    ``"gaussian"``, ``(size, prob)`` for ``"negbin"``, ``(shape, rate)`` for
    ``"gamma"``.  ``assumed`` is the variance, size or shape used to thin.
    """

    family: str
    true: tuple[float, float]
    assumed: float
    epsilon: float

    def __post_init__(self):
        if self.family not in ("gaussian", "negbin", "gamma"):
            raise ValueError(f"unsupported family {self.family!r}")
        a, b = (float(v) for v in self.true)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.assumed > 0:
            raise ValueError("assumed nuisance must be positive")
        if self.family == "gaussian" and not b > 0:
            raise ValueError("variance must be positive")
        if self.family == "negbin" and not (a > 0 and 0 < b < 1):
            raise ValueError("negative binomial needs size > 0 and prob in (0, 1)")
        if self.family == "gamma" and not (a > 0 and b > 0):
            raise ValueError("gamma shape and rate must be positive")
        object.__setattr__(self, "true", (a, b))

    def data_law(self):
        a, b = self.true
        if self.family == "gaussian":
            return S.Normal(a, b)
        if self.family == "negbin":
            return S.NegativeBinomial(a, b)
        return S.Gamma(a, b)

    def thinning_family(self) -> T.Family:
        if self.family == "gaussian":
            return T.Gaussian(self.assumed)
        if self.family == "negbin":
            return T.NegativeBinomial(self.assumed)
        return T.Gamma(self.assumed)

    def true_nuisance(self) -> float:
        return self.true[1] if self.family == "gaussian" else self.true[0]

    def with_assumed(self, assumed: float) -> "MismatchSpec":
        return MismatchSpec(self.family, self.true, assumed, self.epsilon)


def mismatch_moments(spec: MismatchSpec) -> dict:
    """Marginal variances, covariance and correlation of the two folds."""
    e = spec.epsilon
    w = e * (1 - e)
    if spec.family == "gaussian":
        s2, t2 = spec.true[1], spec.assumed
        var1 = e**2 * s2 + w * t2
        var2 = (1 - e) ** 2 * s2 + w * t2
        cov = w * (s2 - t2)
    else:
        law = spec.data_law()
        mean, var = float(law.mean()), float(law.var())
        a, rt = spec.true[0], spec.assumed
        if spec.family == "negbin":
            p = spec.true[1]
            shared = w / (rt + 1) * (rt * mean + var + mean**2)
            cov = w * a * ((1 - p) / p) ** 2 * (1 - (a + 1) / (rt + 1))
        else:
            shared = w / (rt + 1) * (var + mean**2)
            cov = w * var * (1 - (a + 1) / (rt + 1))
        var1 = shared + e**2 * var
        var2 = shared + (1 - e) ** 2 * var
    return {"var1": var1, "var2": var2, "cov": cov, "corr": cov / math.sqrt(var1 * var2)}


def _simulate(spec: MismatchSpec, x, stream):
    x1, x2 = T.thin(x, spec.thinning_family(), spec.epsilon, stream)
    return {
        "corr_hat": float(np.corrcoef(x1, x2)[0, 1]),
        "mean1_hat": float(np.mean(x1)),
        "mean2_hat": float(np.mean(x2)),
    }


def empirical_fold_stats(spec: MismatchSpec, n_reps: int, stream: RandomStream) -> dict:
    """Simulate ``X`` from the true law, thin with the assumed nuisance, summarise."""
    if n_reps < 2:
        raise ValueError("need at least two replicates")
    x = S.sample(spec.data_law(), stream.substream(0), n_reps)
    return _simulate(spec, x, stream.substream(1))


def default_grid(true_value: float, points: int = 50):
    """Multiples ``(k + 2) / 20`` of the true value; index 18 is exactly the truth."""
    return [true_value * (k + 2) / 20 for k in range(points)]


def mismatch_sweep(spec: MismatchSpec, grid, n_reps: int, stream: RandomStream) -> list[dict]:
    """One row per assumed nuisance value: theoretical and empirical correlation.

    The same ``n_reps`` realisations of ``X`` are thinned at every grid point.
    ``spec.assumed`` is ignored in favour of the grid values.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty nuisance grid")
    x = S.sample(spec.data_law(), stream.substream(0), n_reps)
    rows = []
    for i, g in enumerate(grid):
        s = spec.with_assumed(g)
        theory = mismatch_moments(s)["corr"]
        emp = _simulate(s, x, stream.substream(1).substream(i))
        rows.append({"nuisance": float(g), "corr_theory": float(theory), "corr_hat": emp["corr_hat"]})
    return rows


# ---------------------------------------------------------------------------
# Fisher information


_FIXED_AT_THINNING = {
    ("gaussian", "var"),
    ("binomial", "trials"),
    ("negbin", "size"),
    ("gamma", "shape"),
}


@dataclass(frozen=True)
class FisherQuery:
    """Target parameter of a family plus fold weights.

    ``params`` carries what the information depends on: ``{"rate"}`` for
    poisson, ``{"trials", "prob"}`` for binomial, ``{"var"}`` for the
    gaussian mean, ``{"shape", "rate"}`` for the gamma rate and
    ``{"size", "prob"}`` for the negative binomial probability.
    """

    family: str
    parameter: str
    params: dict
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if (self.family, self.parameter) in _FIXED_AT_THINNING:
            raise ScopeError(
                f"{self.family} {self.parameter} must be known to thin, so its information is not allocated"
            )
        T.ThinPlan(self.epsilons)


def total_information(family: str, parameter: str, params: dict) -> float:
    """Fisher information about ``parameter`` in one unthinned observation."""
    key = (family, parameter)
    if key in _FIXED_AT_THINNING:
        raise ScopeError(f"{family} {parameter} is fixed at thinning time")
    if key == ("poisson", "rate"):
        return 1.0 / params["rate"]
    if key == ("binomial", "prob"):
        p = params["prob"]
        return params["trials"] / (p * (1 - p))
    if key == ("gaussian", "mean"):
        return 1.0 / params["var"]
    if key == ("gamma", "rate"):
        return params["shape"] / params["rate"] ** 2
    if key == ("negbin", "prob"):
        p = params["prob"]
        return params["size"] / (p**2 * (1 - p))
    raise ScopeError(f"no information formula for {family} {parameter}")


def fisher_allocation(q: FisherQuery) -> np.ndarray:
    """Information in each fold: ``eps_m * I_X(theta)``."""
    total = total_information(q.family, q.parameter, q.params)
    return np.asarray(q.epsilons, dtype=float) * total


def splitting_information(n: int, epsilon: float, per_obs_informations, train=None) -> dict:
    """Training/test information under thinning versus sample splitting.

    Sample splitting assigns ``train`` (default: the first ``eps * n``
    indices) to the training set.  When ``eps * n`` is not an integer the
    splitting entries are ``None`` and ``ss_error`` explains why.
    """
    info = np.asarray(per_obs_informations, dtype=float)
    if info.shape != (n,):
        raise ValueError(f"expected {n} per-observation informations, got shape {info.shape}")
    total = float(info.sum())
    out = {"train_dt": epsilon * total, "test_dt": (1 - epsilon) * total, "train_ss": None, "test_ss": None, "ss_error": None}
    n_train = epsilon * n
    if train is None:
        if abs(n_train - round(n_train)) > 1e-9:
            out["ss_error"] = f"eps * n = {n_train:g} is not an integer"
            return out
        train = np.arange(int(round(n_train)))
    train = np.asarray(train, dtype=int)
    mask = np.zeros(n, dtype=bool)
    mask[train] = True
    out["train_ss"] = float(info[mask].sum())
    out["test_ss"] = float(info[~mask].sum())
    return out
