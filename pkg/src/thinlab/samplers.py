"""Seeded sampling primitives.

Every variate is an inverse-CDF (or fixed-arity) transform of uniforms taken
from a :class:`~thinlab.rng.RandomStream` at explicit addresses, so a draw
is reproducible cell by cell.  Each distribution declares how many uniform
slots one variate consumes (``n_slots``); composite samplers lay their
parts out in consecutive slot ranges.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .rng import RandomStream

HYPERGEOM_INVERSION_LIMIT = 10**6


class ParameterError(ValueError):
    """A distribution parameter lies outside its domain."""


class UniformSource:
    """Uniforms for a batch of cells, addressed by slot.

    ``rows`` and ``cols`` are integer arrays (broadcastable) naming the cells;
    ``base`` offsets every requested slot.
    """

    def __init__(self, stream: RandomStream, rows, cols=0, base: int = 0):
        self.stream = stream
        self.rows = np.asarray(rows, dtype=np.uint64)
        self.cols = np.asarray(cols, dtype=np.uint64)
        self.base = int(base)

    def __call__(self, slot: int):
        return self.stream.uniforms(self.rows, self.cols, self.base + int(slot))

    def shifted(self, offset: int) -> "UniformSource":
        return UniformSource(self.stream, self.rows, self.cols, self.base + int(offset))

    def take(self, mask) -> "UniformSource":
        rows, cols = np.broadcast_arrays(self.rows, self.cols)
        return UniformSource(self.stream, rows[mask], cols[mask], self.base)

    @property
    def shape(self):
        return np.broadcast_shapes(self.rows.shape, self.cols.shape)


# ---------------------------------------------------------------------------
# inverse-CDF transforms of uniforms


def normal_from_uniform(u, mean, var):
    var = np.asarray(var, dtype=float)
    # var == 0 is a point mass at the mean
    return np.asarray(mean, dtype=float) + np.sqrt(var) * special.ndtri(u)


def gamma_from_uniforms(u0, u1, shape, rate=1.0):
    """Gamma(shape, rate) from two uniforms.

    For ``shape < 1`` the boosting identity ``G(a) = G(a + 1) * U**(1/a)`` is
    used; the second uniform is ignored otherwise.
    """
    return np.exp(log_gamma_from_uniforms(u0, u1, shape)) / np.asarray(rate, dtype=float)


def log_gamma_from_uniforms(u0, u1, shape):
    """Logarithm of a standard Gamma(shape) variate (see gamma_from_uniforms)."""
    shape = np.asarray(shape, dtype=float)
    small = shape < 1.0
    boosted = np.where(small, shape + 1.0, shape)
    with np.errstate(divide="ignore"):
        out = np.log(special.gammaincinv(boosted, u0))
        out = out + np.where(small, np.log(u1) / np.where(small, shape, 1.0), 0.0)
    return out


def beta_from_uniform(u, a, b):
    return special.betaincinv(a, b, u)


def _bisect_discrete(cdf, u, lo, hi):
    # smallest integer k in [lo, hi] with cdf(k) >= u; requires cdf(hi) >= u
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    u = np.broadcast_to(u, lo.shape)
    active = lo < hi
    while active.any():
        mid = np.floor((lo[active] + hi[active]) / 2.0)
        ok = cdf(mid, active) >= u[active]
        h, l_ = hi[active], lo[active]
        hi[active] = np.where(ok, mid, h)
        lo[active] = np.where(ok, l_, mid + 1.0)
        active = lo < hi
    return lo


def binomial_from_uniform(u, n, p):
    n, p, u = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(p, dtype=float), u)

    def cdf(k, sel):
        nn, pp = n[sel], p[sel]
        return np.where(k >= nn, 1.0, special.betainc(np.maximum(nn - k, 1e-300), k + 1.0, 1.0 - pp))

    return _bisect_discrete(cdf, u, np.zeros_like(n), n).astype(np.int64)


def _unbounded_upper(cdf_all, u, start):
    hi = np.maximum(np.ceil(start), 1.0)
    for _ in range(200):
        short = cdf_all(hi) < u
        if not short.any():
            return hi
        hi = np.where(short, hi * 2.0, hi)
    raise RuntimeError("failed to bracket the quantile")


def poisson_from_uniform(u, lam):
    lam, u = np.broadcast_arrays(np.asarray(lam, dtype=float), u)
    hi = _unbounded_upper(lambda k: special.gammaincc(k + 1.0, lam), u, lam + 10.0 * np.sqrt(lam) + 10.0)
    return _bisect_discrete(lambda k, s: special.gammaincc(k + 1.0, lam[s]), u, np.zeros_like(lam), hi).astype(np.int64)


def negbinom_from_uniform(u, size, prob):
    size, prob, u = np.broadcast_arrays(np.asarray(size, dtype=float), np.asarray(prob, dtype=float), u)
    mean = size * (1.0 - prob) / prob
    sd = np.sqrt(mean / prob)
    hi = _unbounded_upper(lambda k: special.betainc(size, k + 1.0, prob), u, mean + 10.0 * sd + 10.0)
    return _bisect_discrete(
        lambda k, s: special.betainc(size[s], k + 1.0, prob[s]), u, np.zeros_like(size), hi
    ).astype(np.int64)


def hypergeometric_from_uniform(u, successes, failures, draws):
    """Number of successes in ``draws`` draws without replacement.

    Exact CDF inversion for populations up to ``HYPERGEOM_INVERSION_LIMIT``;
    larger populations fall back to numpy's ratio-of-uniforms rejection
    sampler seeded from the uniform.
    """
    good, bad, nd, u = np.broadcast_arrays(
        np.asarray(successes, dtype=np.int64),
        np.asarray(failures, dtype=np.int64),
        np.asarray(draws, dtype=np.int64),
        u,
    )
    shape = good.shape
    good, bad, nd, u = (np.atleast_1d(a) for a in (good, bad, nd, u))
    lo = np.maximum(0, nd - bad).astype(float)
    hi = np.minimum(good, nd).astype(float)
    out = np.empty(good.shape, dtype=np.int64)
    big = (good + bad) > HYPERGEOM_INVERSION_LIMIT
    small = ~big
    if small.any():
        g, b, d = good[small], bad[small], nd[small]

        def cdf(k, sel):
            return stats.hypergeom.cdf(k, g[sel] + b[sel], g[sel], d[sel])

        out[small] = _bisect_discrete(cdf, u[small], lo[small], hi[small]).astype(np.int64)
    for idx in zip(*np.nonzero(big)):
        seed = int(u[idx] * 2.0**53)
        out[idx] = np.random.Generator(np.random.Philox(seed)).hypergeometric(good[idx], bad[idx], nd[idx])
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# scalar distributions


def _check(cond, msg):
    if not np.all(cond):
        raise ParameterError(msg)


@dataclass(frozen=True)
class Binomial:
    trials: object
    prob: object
    n_slots = 1

    def __post_init__(self):
        t = np.asarray(self.trials)
        _check(np.equal(np.floor(t), t) & (t >= 0), f"Binomial trials must be non-negative integers: {self.trials}")
        _check((np.asarray(self.prob) >= 0) & (np.asarray(self.prob) <= 1), f"Binomial prob must lie in [0, 1]: {self.prob}")

    def transform(self, u: UniformSource):
        return binomial_from_uniform(u(0), self.trials, self.prob)

    def mean(self):
        return np.asarray(self.trials) * np.asarray(self.prob)

    def var(self):
        p = np.asarray(self.prob)
        return np.asarray(self.trials) * p * (1 - p)


@dataclass(frozen=True)
class Beta:
    a: object
    b: object
    n_slots = 1

    def __post_init__(self):
        _check((np.asarray(self.a) > 0) & (np.asarray(self.b) > 0), "Beta parameters must be positive")

    def transform(self, u: UniformSource):
        return beta_from_uniform(u(0), self.a, self.b)

    def mean(self):
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return a / (a + b)

    def var(self):
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return a * b / ((a + b) ** 2 * (a + b + 1))

    def cdf(self, x):
        return stats.beta.cdf(x, self.a, self.b)


@dataclass(frozen=True)
class Gamma:
    """Gamma with shape/rate parameterisation (mean shape/rate)."""

    shape: object
    rate: object = 1.0
    n_slots = 2

    def __post_init__(self):
        _check((np.asarray(self.shape) > 0) & (np.asarray(self.rate) > 0), "Gamma shape and rate must be positive")

    def transform(self, u: UniformSource):
        return gamma_from_uniforms(u(0), u(1), self.shape, self.rate)

    def mean(self):
        return np.asarray(self.shape, float) / np.asarray(self.rate, float)

    def var(self):
        return np.asarray(self.shape, float) / np.asarray(self.rate, float) ** 2

    def cdf(self, x):
        return special.gammainc(self.shape, np.asarray(x) * self.rate)


@dataclass(frozen=True)
class Hypergeometric:
    successes: object
    failures: object
    draws: object
    n_slots = 1

    def __post_init__(self):
        s, f, d = (np.asarray(v) for v in (self.successes, self.failures, self.draws))
        _check((s >= 0) & (f >= 0) & (d >= 0), "Hypergeometric counts must be non-negative")
        _check(d <= s + f, "Hypergeometric draws exceed the population")

    def transform(self, u: UniformSource):
        return hypergeometric_from_uniform(u(0), self.successes, self.failures, self.draws)

    def mean(self):
        s, f, d = (np.asarray(v, float) for v in (self.successes, self.failures, self.draws))
        return d * s / (s + f)

    def var(self):
        s, f, d = (np.asarray(v, float) for v in (self.successes, self.failures, self.draws))
        N = s + f
        return d * (s / N) * (f / N) * (N - d) / (N - 1)


@dataclass(frozen=True)
class Normal:
    mean_: object = 0.0
    var_: object = 1.0
    n_slots = 1

    def __post_init__(self):
        _check(np.asarray(self.var_) >= 0, "Normal variance must be non-negative")

    def transform(self, u: UniformSource):
        return normal_from_uniform(u(0), self.mean_, self.var_)

    def mean(self):
        return np.asarray(self.mean_, float)

    def var(self):
        return np.asarray(self.var_, float)

    def cdf(self, x):
        return stats.norm.cdf(x, self.mean_, np.sqrt(self.var_))


@dataclass(frozen=True)
class BetaBinomial:
    """Beta-binomial, drawn as p ~ Beta(a, b) then Binomial(trials, p)."""

    trials: object
    a: object
    b: object
    n_slots = 2

    def __post_init__(self):
        t = np.asarray(self.trials)
        _check(np.equal(np.floor(t), t) & (t >= 0), "BetaBinomial trials must be non-negative integers")
        _check((np.asarray(self.a) > 0) & (np.asarray(self.b) > 0), "BetaBinomial a, b must be positive")

    def transform(self, u: UniformSource):
        p = beta_from_uniform(u(0), self.a, self.b)
        return binomial_from_uniform(u(1), self.trials, p)

    def mean(self):
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return np.asarray(self.trials) * a / (a + b)

    def var(self):
        n = np.asarray(self.trials, float)
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return n * a * b * (a + b + n) / ((a + b) ** 2 * (a + b + 1))


@dataclass(frozen=True)
class Poisson:
    rate: object
    n_slots = 1

    def __post_init__(self):
        _check(np.asarray(self.rate) >= 0, "Poisson rate must be non-negative")

    def transform(self, u: UniformSource):
        return poisson_from_uniform(u(0), self.rate)

    def mean(self):
        return np.asarray(self.rate, float)

    var = mean

    def cdf(self, x):
        return stats.poisson.cdf(x, self.rate)


@dataclass(frozen=True)
class NegativeBinomial:
    """Failures before the ``size``-th success; mean size*(1-prob)/prob."""

    size: object
    prob: object
    n_slots = 1

    def __post_init__(self):
        _check(np.asarray(self.size) > 0, "NegativeBinomial size must be positive")
        p = np.asarray(self.prob)
        _check((p > 0) & (p <= 1), "NegativeBinomial prob must lie in (0, 1]")

    def transform(self, u: UniformSource):
        return negbinom_from_uniform(u(0), self.size, self.prob)

    def mean(self):
        p = np.asarray(self.prob, float)
        return np.asarray(self.size, float) * (1 - p) / p

    def var(self):
        p = np.asarray(self.prob, float)
        return np.asarray(self.size, float) * (1 - p) / p**2

    def cdf(self, x):
        return stats.nbinom.cdf(x, self.size, self.prob)


# ---------------------------------------------------------------------------
# vector distributions; variates carry a trailing component axis


def _as_vector(v, name, dtype=float):
    arr = np.asarray(v, dtype=dtype)
    if arr.ndim < 1 or arr.shape[-1] < 1:
        raise ParameterError(f"{name} must be a non-empty vector")
    return arr


@dataclass(frozen=True)
class Dirichlet:
    alphas: object
    n_slots: int = field(init=False)

    def __post_init__(self):
        a = _as_vector(self.alphas, "Dirichlet alphas")
        _check(a > 0, "Dirichlet alphas must be positive")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "n_slots", 2 * a.shape[-1])

    def transform(self, u: UniformSource):
        # normalised gammas, in log space so tiny shapes do not underflow
        k = self.alphas.shape[-1]
        logs = np.stack(
            [log_gamma_from_uniforms(u(2 * j), u(2 * j + 1), self.alphas[..., j]) for j in range(k)], axis=-1
        )
        return np.exp(logs - special.logsumexp(logs, axis=-1, keepdims=True))


@dataclass(frozen=True)
class Multinomial:
    """Multinomial via sequential conditional binomials."""

    trials: object
    probs: object
    n_slots: int = field(init=False)

    def __post_init__(self):
        p = _as_vector(self.probs, "Multinomial probs")
        _check(p >= 0, "Multinomial probs must be non-negative")
        _check(np.abs(p.sum(axis=-1) - 1.0) <= 1e-12, "Multinomial probs must sum to 1")
        t = np.asarray(self.trials)
        _check(np.equal(np.floor(t), t) & (t >= 0), "Multinomial trials must be non-negative integers")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "n_slots", max(p.shape[-1] - 1, 1))

    def transform(self, u: UniformSource):
        p = self.probs
        k = p.shape[-1]
        shape = np.broadcast_shapes(u.shape, np.shape(self.trials), p.shape[:-1])
        remaining = np.broadcast_to(np.asarray(self.trials, dtype=np.int64), shape).copy()
        mass = np.ones(shape)
        out = np.zeros(shape + (k,), dtype=np.int64)
        for j in range(k - 1):
            pj = np.broadcast_to(p[..., j], shape)
            cond = np.clip(np.divide(pj, mass, out=np.zeros(shape), where=mass > 0), 0.0, 1.0)
            out[..., j] = binomial_from_uniform(u(j), remaining, cond)
            remaining = remaining - out[..., j]
            mass = mass - pj
        out[..., k - 1] = remaining
        return out


@dataclass(frozen=True)
class MultivariateHypergeometric:
    """Counts drawn from each bin when sampling ``draws`` items without replacement."""

    bin_counts: object
    draws: object
    n_slots: int = field(init=False)

    def __post_init__(self):
        c = _as_vector(self.bin_counts, "bin_counts", dtype=np.int64)
        _check(c >= 0, "bin_counts must be non-negative")
        d = np.asarray(self.draws)
        _check(d >= 0, "draws must be non-negative")
        _check(d <= c.sum(axis=-1), "draws exceed the population")
        object.__setattr__(self, "bin_counts", c)
        object.__setattr__(self, "n_slots", max(c.shape[-1] - 1, 1))

    def transform(self, u: UniformSource):
        c = self.bin_counts
        k = c.shape[-1]
        shape = np.broadcast_shapes(u.shape, np.shape(self.draws), c.shape[:-1])
        c = np.broadcast_to(c, shape + (k,))
        left = np.broadcast_to(np.asarray(self.draws, dtype=np.int64), shape).copy()
        rest = c.sum(axis=-1)
        out = np.zeros(shape + (k,), dtype=np.int64)
        for j in range(k - 1):
            rest = rest - c[..., j]
            out[..., j] = hypergeometric_from_uniform(u(j), c[..., j], rest, left)
            left = left - out[..., j]
        out[..., k - 1] = left
        return out


@dataclass(frozen=True)
class DirichletMultinomial:
    trials: object
    alphas: object
    n_slots: int = field(init=False)

    def __post_init__(self):
        a = _as_vector(self.alphas, "alphas")
        _check(a > 0, "DirichletMultinomial alphas must be positive")
        t = np.asarray(self.trials)
        _check(np.equal(np.floor(t), t) & (t >= 0), "trials must be non-negative integers")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "n_slots", 2 * a.shape[-1] + max(a.shape[-1] - 1, 1))

    def transform(self, u: UniformSource):
        k = self.alphas.shape[-1]
        p = Dirichlet(self.alphas).transform(u)
        # renormalise against rounding so the conditional binomials stay valid
        p = p / p.sum(axis=-1, keepdims=True)
        return _multinomial_unchecked(self.trials, p, u.shifted(2 * k))


def _multinomial_unchecked(trials, probs, u):
    m = Multinomial.__new__(Multinomial)
    object.__setattr__(m, "trials", trials)
    object.__setattr__(m, "probs", probs)
    object.__setattr__(m, "n_slots", max(probs.shape[-1] - 1, 1))
    return m.transform(u)


def _factor_psd(cov, name="cov"):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ParameterError(f"{name} must be a square matrix")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-10):
        raise ParameterError(f"{name} must be symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        if w.min() < -1e-8 * max(w.max(), 0.0):
            raise ParameterError(f"{name} is not positive semi-definite (min eigenvalue {w.min():.3g})")
        return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class MultivariateNormal:
    mean_: object
    cov: object
    n_slots: int = field(init=False)
    factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = _as_vector(self.mean_, "mean")
        object.__setattr__(self, "mean_", m)
        object.__setattr__(self, "factor", _factor_psd(self.cov))
        if self.factor.shape[0] != m.shape[-1]:
            raise ParameterError("mean and cov dimensions differ")
        object.__setattr__(self, "n_slots", m.shape[-1])

    def transform(self, u: UniformSource):
        k = self.mean_.shape[-1]
        z = np.stack([special.ndtri(u(j)) for j in range(k)], axis=-1)
        return self.mean_ + z @ self.factor.T


PrimitiveDist = Binomial | Beta | Gamma | Hypergeometric | Normal | BetaBinomial | Poisson | NegativeBinomial
VectorDist = Dirichlet | Multinomial | MultivariateHypergeometric | DirichletMultinomial | MultivariateNormal


def sample(dist, stream: RandomStream, size=None, start: int = 0):
    """Vectorised draws at counters ``start .. start+size-1``.

    With ``size=None`` the draw shape follows the broadcast parameter shape.
    """
    if size is None:
        shape = _param_shape(dist)
    else:
        shape = (size,) if np.ndim(size) == 0 else tuple(size)
    n = int(np.prod(shape, dtype=np.int64))
    rows = np.arange(start, start + n, dtype=np.uint64).reshape(shape)
    return dist.transform(UniformSource(stream, rows))


def draw(dist, stream: RandomStream, index: int = 0):
    """One variate at counter ``index``; scalar for scalar dists."""
    out = dist.transform(UniformSource(stream, np.uint64(index)))
    return out.item() if np.ndim(out) == 0 else out


def draw_vector(dist, stream: RandomStream, index: int = 0):
    """One vector variate at counter ``index``."""
    return np.asarray(dist.transform(UniformSource(stream, np.uint64(index))))


def _param_shape(dist):
    if isinstance(dist, (Dirichlet, Multinomial, MultivariateHypergeometric, DirichletMultinomial, MultivariateNormal)):
        return ()
    vals = [np.asarray(getattr(dist, f)) for f in dist.__dataclass_fields__]
    return np.broadcast_shapes(*(v.shape for v in vals))
