"""Two-fold and multifold data thinning for convolution-closed families.

Each family knows the conditional law of one summand given the total, for two
folds and for ``M`` folds, and draws it from a :class:`UniformSource` so that
every cell of a dataset is thinned from its own addressed uniforms.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import samplers as S
from .rng import RandomStream
from .samplers import ParameterError, UniformSource


class PlanError(ValueError):
    """Fold weights are invalid for the requested family."""


class DomainError(ValueError):
    """Observation lies outside the family's support."""


class UsageError(ValueError):
    """Incompatible combination of options."""


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class ThinPlan:
    """Fold weights ``eps_1..eps_M`` with each in (0, 1) and summing to one."""

    epsilons: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in np.atleast_1d(self.epsilons))
        if len(eps) < 2:
            raise PlanError(f"a plan needs at least two folds, got {len(eps)}")
        if not all(0.0 < e < 1.0 for e in eps):
            raise PlanError(f"fold weights must lie in (0, 1): {eps}")
        if abs(sum(eps) - 1.0) > 1e-12:
            raise PlanError(f"fold weights must sum to 1 (got {sum(eps)!r})")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def equal(cls, folds: int) -> "ThinPlan":
        if folds < 2:
            raise PlanError(f"a plan needs at least two folds, got {folds}")
        return cls((1.0 / folds,) * folds)

    @classmethod
    def two(cls, epsilon: float) -> "ThinPlan":
        return cls((epsilon, 1.0 - epsilon))

    def __len__(self):
        return len(self.epsilons)

    def as_array(self):
        return np.asarray(self.epsilons)


def _integer_split(eps, trials):
    parts = np.asarray(eps, dtype=float) * trials
    rounded = np.round(parts)
    if np.any(np.abs(parts - rounded) > 1e-9) or np.any(rounded < 1):
        raise PlanError(f"eps * trials must be a positive integer for every fold (eps={tuple(np.atleast_1d(eps))}, trials={trials})")
    return rounded.astype(np.int64)


# ---------------------------------------------------------------------------
# families


class Family:
    """Base class; subclasses are frozen dataclasses."""

    multivariate = False
    integer = False
    name = ""

    def check_support(self, x):
        pass

    def check_plan(self, eps):
        pass

    def thin2(self, x, eps, u: UniformSource):
        raise NotImplementedError

    def thin_pair(self, x, eps, u: UniformSource):
        x1 = self.thin2(x, eps, u)
        if self.integer:
            x1 = np.asarray(x1, dtype=np.int64)
            return x1, np.asarray(x).astype(np.int64) - x1
        x1 = np.asarray(x1, dtype=float)
        return x1, np.asarray(x).astype(float) - x1

    def split(self, x, eps, u: UniformSource):
        raise NotImplementedError

    def to_dict(self):
        d = {"family": self.name}
        for k in getattr(self, "__dataclass_fields__", {}):
            v = getattr(self, k)
            d[k] = np.asarray(v).tolist()
        return d


def _require(cond, msg, exc=DomainError):
    if not np.all(cond):
        raise exc(msg)


def _check_counts(x, what):
    x = np.asarray(x)
    _require(np.all(np.isfinite(x)), f"{what}: observations must be finite")
    _require(np.equal(np.floor(x), x), f"{what}: observations must be integer counts")
    _require(x >= 0, f"{what}: observations must be non-negative")


@dataclass(frozen=True)
class Poisson(Family):
    integer = True
    name = "poisson"

    def check_support(self, x):
        _check_counts(x, "poisson")

    def thin2(self, x, eps, u):
        return S.binomial_from_uniform(u(0), x, eps)

    def split(self, x, eps, u):
        probs = np.broadcast_to(eps, np.shape(x) + (len(eps),))
        folds = S._multinomial_unchecked(np.asarray(x, dtype=np.int64), probs, u)
        return np.moveaxis(folds, -1, 0)


@dataclass(frozen=True)
class Gaussian(Family):
    """Univariate normal with known variance ``var``."""

    var: float
    name = "gaussian"

    def __post_init__(self):
        if not self.var > 0:
            raise ParameterError(f"gaussian variance must be positive, got {self.var}")

    def check_support(self, x):
        _require(np.isfinite(np.asarray(x, dtype=float)), "gaussian: observations must be finite")

    def thin2(self, x, eps, u):
        return S.normal_from_uniform(u(0), eps * np.asarray(x, dtype=float), eps * (1 - eps) * self.var)

    def split(self, x, eps, u):
        x = np.asarray(x, dtype=float)
        folds = []
        rest, used = x, 0.0
        for m, e in enumerate(eps[:-1]):
            w = e / (1.0 - used)
            # rest ~ N((1 - used) mu, (1 - used) var): a two-fold split at weight w
            fold = S.normal_from_uniform(u(m), w * rest, w * (1 - w) * (1.0 - used) * self.var)
            folds.append(fold)
            rest = rest - fold
            used += e
        folds.append(x - np.sum(folds, axis=0))
        return np.stack(folds)


@dataclass(frozen=True)
class MultivariateGaussian(Family):
    """k-variate normal with known covariance; observations are rows."""

    cov: tuple
    multivariate = True
    name = "mvgaussian"

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        S._factor_psd(cov)
        object.__setattr__(self, "cov", tuple(map(tuple, cov)))

    @property
    def dims(self):
        return len(self.cov)

    def _factor(self):
        return S._factor_psd(np.asarray(self.cov))

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        _require(x.ndim >= 1 and x.shape[-1] == self.dims, f"mvgaussian: rows must have {self.dims} entries")
        _require(np.isfinite(x), "mvgaussian: observations must be finite")

    def _normal(self, u, base, mean, scale):
        k = self.dims
        z = np.stack([special.ndtri(u(base + j)) for j in range(k)], axis=-1)
        return mean + np.sqrt(scale) * (z @ self._factor().T)

    def thin2(self, x, eps, u):
        x = np.asarray(x, dtype=float)
        return self._normal(u, 0, eps * x, eps * (1 - eps))

    def split(self, x, eps, u):
        x = np.asarray(x, dtype=float)
        folds, rest, used = [], x, 0.0
        for m, e in enumerate(eps[:-1]):
            w = e / (1.0 - used)
            fold = self._normal(u, m * self.dims, w * rest, w * (1 - w) * (1.0 - used))
            folds.append(fold)
            rest = rest - fold
            used += e
        folds.append(x - np.sum(folds, axis=0))
        return np.stack(folds)


@dataclass(frozen=True)
class NegativeBinomial(Family):
    """Negative binomial with known size ``r``."""

    size: float
    integer = True
    name = "negbin"

    def __post_init__(self):
        if not self.size > 0:
            raise ParameterError(f"negative binomial size must be positive, got {self.size}")

    def check_support(self, x):
        _check_counts(x, "negbin")

    def thin2(self, x, eps, u):
        p = S.beta_from_uniform(u(0), eps * self.size, (1 - eps) * self.size)
        return S.binomial_from_uniform(u(1), x, p)

    def split(self, x, eps, u):
        # Dirichlet-multinomial: probabilities first, then sequential binomials
        k = len(eps)
        p = S.Dirichlet(np.asarray(eps) * self.size).transform(u)
        p = p / p.sum(axis=-1, keepdims=True)
        folds = S._multinomial_unchecked(np.asarray(x, dtype=np.int64), p, u.shifted(2 * k))
        return np.moveaxis(folds, -1, 0)


@dataclass(frozen=True)
class Gamma(Family):
    """Gamma with known shape ``alpha`` (rate unknown)."""

    shape: float
    name = "gamma"

    def __post_init__(self):
        if not self.shape > 0:
            raise ParameterError(f"gamma shape must be positive, got {self.shape}")

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        _require(np.isfinite(x) & (x > 0), f"{self.name}: observations must be positive and finite")

    def thin2(self, x, eps, u):
        return self.thin_pair(x, eps, u)[0]

    def thin_pair(self, x, eps, u):
        # the smaller share is scaled directly and the larger one is the
        # remainder, so neither fold can round down to zero
        x = np.asarray(x, dtype=float)
        a, b = eps * self.shape, (1 - eps) * self.shape
        z = special.betaincinv(a, b, u(0))
        w = special.betainccinv(b, a, u(0))  # 1 - z without cancellation
        first_small = z <= w
        x1 = np.where(first_small, x * z, x - x * w)
        x2 = np.where(first_small, x - x1, x * w)
        return x1, x2

    def split(self, x, eps, u):
        x = np.asarray(x, dtype=float)
        z = np.moveaxis(S.Dirichlet(np.asarray(eps) * self.shape).transform(u), -1, 0)
        folds = z * x
        # the largest fold absorbs the rounding residual, keeping all folds positive
        big = np.argmax(z, axis=0)
        others = folds.sum(axis=0) - np.take_along_axis(folds, big[None], axis=0)[0]
        np.put_along_axis(folds, big[None], (x - others)[None], axis=0)
        return folds


@dataclass(frozen=True)
class Exponential(Gamma):
    """Exponential, thinned as a gamma with shape one."""

    shape: float = field(default=1.0, init=False)
    name = "exponential"

    def to_dict(self):
        return {"family": self.name}


@dataclass(frozen=True)
class Binomial(Family):
    """Binomial with known number of trials ``r``."""

    trials: int
    integer = True
    name = "binomial"

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"binomial trials must be a positive integer, got {self.trials}")
        object.__setattr__(self, "trials", int(self.trials))

    def check_support(self, x):
        _check_counts(x, "binomial")
        _require(np.asarray(x) <= self.trials, f"binomial: observations exceed trials={self.trials}")

    def check_plan(self, eps):
        _integer_split(eps, self.trials)

    def thin2(self, x, eps, u):
        good = _integer_split(eps, self.trials)
        return S.hypergeometric_from_uniform(u(0), good, self.trials - good, x)

    def split(self, x, eps, u):
        bins = _integer_split(eps, self.trials)
        x = np.asarray(x, dtype=np.int64)
        out, left, rest = [], x, self.trials
        for m, b in enumerate(bins[:-1]):
            rest -= b
            fold = S.hypergeometric_from_uniform(u(m), b, rest, left)
            out.append(fold)
            left = left - fold
        out.append(left)
        return np.stack(out)


@dataclass(frozen=True)
class Multinomial(Family):
    """k-category multinomial with known trials; observations are count rows."""

    trials: int
    dims: int
    integer = True
    multivariate = True
    name = "multinomial"

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"multinomial trials must be a positive integer, got {self.trials}")
        if int(self.dims) < 2:
            raise ParameterError("multinomial needs at least two categories")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "dims", int(self.dims))

    def check_support(self, x):
        x = np.asarray(x)
        _check_counts(x, "multinomial")
        _require(x.ndim >= 1 and x.shape[-1] == self.dims, f"multinomial: rows must have {self.dims} entries")
        _require(x.sum(axis=-1) == self.trials, f"multinomial: rows must sum to trials={self.trials}")

    def check_plan(self, eps):
        _integer_split(eps, self.trials)

    def _mvhyper(self, counts, draws, u):
        k = self.dims
        left = np.broadcast_to(np.asarray(draws, dtype=np.int64), counts.shape[:-1]).copy()
        rest = counts.sum(axis=-1)
        out = np.zeros_like(counts)
        for j in range(k - 1):
            rest = rest - counts[..., j]
            out[..., j] = S.hypergeometric_from_uniform(u(j), counts[..., j], rest, left)
            left = left - out[..., j]
        out[..., k - 1] = left
        return out

    def thin2(self, x, eps, u):
        draws = _integer_split(eps, self.trials)
        return self._mvhyper(np.asarray(x, dtype=np.int64), draws, u)

    def split(self, x, eps, u):
        draws = _integer_split(eps, self.trials)
        rest = np.asarray(x, dtype=np.int64)
        out = []
        for m, d in enumerate(draws[:-1]):
            fold = self._mvhyper(rest, d, u.shifted(m * (self.dims - 1)))
            out.append(fold)
            rest = rest - fold
        out.append(rest)
        return np.stack(out)


FAMILIES = {
    "poisson": Poisson,
    "gaussian": Gaussian,
    "mvgaussian": MultivariateGaussian,
    "negbin": NegativeBinomial,
    "gamma": Gamma,
    "exponential": Exponential,
    "binomial": Binomial,
    "multinomial": Multinomial,
}


def family_from_dict(d: dict) -> Family:
    d = dict(d)
    cls = FAMILIES[d.pop("family")]
    return cls(**d)


# ---------------------------------------------------------------------------
# fold sets


@dataclass(frozen=True)
class FoldSet:
    """``M`` folds (stacked on axis 0) that sum to the thinned data."""

    folds: np.ndarray
    plan: ThinPlan
    family: Family
    seed: int
    path: tuple[int, ...] = ()

    def __len__(self):
        return self.folds.shape[0]

    def __getitem__(self, m):
        return self.folds[m]

    def total(self):
        return self.folds.sum(axis=0)

    def complement(self, m: int):
        return fold_complement(self, m)


def fold_complement(fs: FoldSet, m: int):
    """Sum of every fold except fold ``m`` (1-based)."""
    M = len(fs)
    if not 1 <= m <= M:
        raise IndexError(f"fold index {m} outside 1..{M}")
    keep = [j for j in range(M) if j != m - 1]
    return fs.folds[keep].sum(axis=0)


# ---------------------------------------------------------------------------
# entry points


def _cell_addresses(shape, multivariate, offset=(0, 0)):
    cells = shape[:-1] if multivariate else shape
    r0, c0 = offset
    if len(cells) == 2 and not multivariate:
        rows = np.arange(cells[0], dtype=np.uint64)[:, None] + np.uint64(r0)
        cols = np.arange(cells[1], dtype=np.uint64)[None, :] + np.uint64(c0)
        return rows, cols
    n = int(np.prod(cells, dtype=np.int64))
    rows = (np.arange(n, dtype=np.uint64) + np.uint64(r0)).reshape(cells)
    return rows, np.uint64(c0)


def _validate(x, family, eps):
    x = np.asarray(x)
    family.check_plan(eps)
    family.check_support(x)
    return x


def thin(x, family: Family, epsilon: float, stream: RandomStream, offset=(0, 0)):
    """Split ``x`` into ``(x1, x2)`` with ``x1 ~ F_{eps lambda}`` and ``x1 + x2 = x``.

    ``x`` may be a scalar or an array of independent observations (rows for
    multivariate families).  Two-dimensional arrays of a scalar family are
    addressed cell by cell through ``(row, col)``, shifted by ``offset``.
    """
    if not 0.0 < float(epsilon) < 1.0:
        raise PlanError(f"epsilon must lie in (0, 1), got {epsilon}")
    eps = float(epsilon)
    x = _validate(x, family, eps)
    rows, cols = _cell_addresses(x.shape, family.multivariate, offset)
    return family.thin_pair(x, eps, UniformSource(stream, rows, cols))


def multithin(x, family: Family, plan: ThinPlan, stream: RandomStream, offset=(0, 0)) -> FoldSet:
    """Draw ``M`` independent folds of ``x`` jointly from the conditional law."""
    if not isinstance(plan, ThinPlan):
        plan = ThinPlan(plan)
    eps = plan.epsilons
    x = _validate(x, family, eps)
    rows, cols = _cell_addresses(x.shape, family.multivariate, offset)
    folds = family.split(x, eps, UniformSource(stream, rows, cols))
    folds = np.asarray(folds, dtype=np.int64 if family.integer else float)
    return FoldSet(folds, plan, family, stream.master_seed, stream.path)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("THINLAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def thin_dataset(X, family: Family, plan, mode: str, stream: RandomStream, workers: int | None = None, offset=(0, 0)) -> FoldSet:
    """Thin an ``n x d`` matrix element by element or row by row.

    Cell ``(i, j)`` (or row ``i``) always reads the same uniforms, so results
    are identical for any ``workers`` and thinning a sub-block with the
    matching ``offset`` reproduces the corresponding cells.  Two-fold plans
    use the two-fold conditional; longer plans the joint multifold one.
    """
    if not isinstance(plan, ThinPlan):
        plan = ThinPlan(plan)
    X = np.asarray(X)
    if mode not in ("elementwise", "rowwise"):
        raise UsageError(f"unknown thinning mode {mode!r}")
    if (mode == "rowwise") != family.multivariate:
        raise UsageError(f"mode {mode!r} does not match family {family.name!r}")
    if X.ndim != 2:
        raise UsageError(f"expected a matrix, got shape {X.shape}")
    _validate(X, family, plan.epsilons)

    def run(lo, hi):
        block = X[lo:hi]
        off = (offset[0] + lo, offset[1])
        if len(plan) == 2:
            x1, x2 = thin(block, family, plan.epsilons[0], stream, offset=off)
            return np.stack([x1, x2])
        return multithin(block, family, plan, stream, offset=off).folds

    n = X.shape[0]
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1 or n < 2:
        folds = run(0, n)
    else:
        edges = np.linspace(0, n, min(workers, n) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, edges[:-1], edges[1:]))
        folds = np.concatenate(parts, axis=1)
    return FoldSet(folds, plan, family, stream.master_seed, stream.path)
