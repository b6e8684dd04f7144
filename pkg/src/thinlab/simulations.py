"""Data generators and experiment drivers for the thinning-versus-splitting
comparison and the rank / cluster-count selection studies."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import regression
from . import samplers as S
from . import selection as SEL
from . import thinning as T
from .rng import RandomStream

TASKS = ("binomial_pca", "gamma_small", "gamma_large")
SCENARIOS = ("iid", "high_leverage")

# index 2 is the third covariate, whose detection and power are tracked
TRACKED_COVARIATE = 2
N_SIGNAL = 5
# path index reserved for the fixed design of the high-leverage scenario;
# replicate indices stay well below it
DESIGN_INDEX = 2**40
LEVERAGE_ROW = 0

SMALL_GAMMA_SHAPE = 20.0
SMALL_GAMMA_RATES = ((0.5, 5.0), (5.0, 0.5), (10.0, 10.0), (0.5, 0.5))
LARGE_GAMMA_SHAPE = 2.0
CLUSTER_SIZE = 100


# ---------------------------------------------------------------------------
# configs and report


@dataclass(frozen=True)
class RegressionSimConfig:
    n: int = 100
    p: int = 20
    beta_star: float = 0.5
    eps: float = 0.8
    n_reps: int = 1000
    scenario: str = "iid"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.p < N_SIGNAL or self.n < 3:
            raise ValueError(f"need p >= {N_SIGNAL} and n >= 3")
        if self.n_reps < 1:
            raise ValueError("n_reps must be positive")

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "RegressionSimConfig":
        base = {"n": 42} if scenario == "high_leverage" else {}
        return cls(scenario=scenario, **{**base, **overrides})

    @property
    def beta(self):
        b = np.zeros(self.p)
        b[:N_SIGNAL] = self.beta_star
        return b

    @property
    def n_train(self) -> int:
        """Training-set size for sample splitting: ``eps * n`` rounded to the nearest integer."""
        return int(np.floor(self.eps * self.n + 0.5))


def _default_candidates(task):
    return {"gamma_small": tuple(range(1, 11)), "gamma_large": tuple(range(1, 16))}.get(task, tuple(range(1, 21)))


# the large clustering task has many k-means local optima at small eps_train
_DEFAULT_RESTARTS = {"gamma_large": 30}


@dataclass(frozen=True)
class SelectionSimConfig:
    task: str = "gamma_small"
    methods: tuple[str, ...] = ("naive", "single:0.5", "single:0.8", "multifold:5")
    losses: tuple[str, ...] = ("nll", "mse")
    candidates: tuple[int, ...] = ()
    n_reps: int = 200
    seed: int = 0
    restarts: int | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.restarts is None:
            object.__setattr__(self, "restarts", _DEFAULT_RESTARTS.get(self.task, 10))
        for m in self.methods:
            SEL.Method.parse(m)
        for kind in self.losses:
            if kind not in SEL.LOSS_KINDS:
                raise ValueError(f"unknown loss {kind!r}")
        if not self.candidates:
            object.__setattr__(self, "candidates", _default_candidates(self.task))
        object.__setattr__(self, "candidates", tuple(int(k) for k in self.candidates))
        if self.n_reps < 1:
            raise ValueError("n_reps must be positive")

    @property
    def true_k(self) -> int:
        return 4 if self.task == "gamma_small" else 10


@dataclass
class SimReport:
    """Aggregated outcome of an experiment; ``metrics`` is keyed by arm label."""

    experiment: str
    seed: int
    n_reps: int
    config: dict
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# generators


def random_orthogonal(rows: int, cols: int, stream: RandomStream):
    """``rows x cols`` matrix with orthonormal columns, Haar distributed."""
    G = S.sample(S.Normal(0.0, 1.0), stream, (rows, cols))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def gen_binomial_pca_data(n: int = 250, d: int = 100, trials: int = 100, true_rank: int = 10, stream: RandomStream | None = None):
    """Counts ``X ~ Binomial(trials, expit(U D V'))`` with ``D = diag(5, 6, ...)``.

    Returns ``(X, p, theta)``.
    """
    if not 1 <= true_rank <= min(n, d):
        raise ValueError(f"rank {true_rank} exceeds min(n, d) = {min(n, d)}")
    stream = RandomStream(0) if stream is None else stream
    U = random_orthogonal(n, true_rank, stream.substream(0))
    V = random_orthogonal(d, true_rank, stream.substream(1))
    D = np.arange(5.0, 5.0 + true_rank)
    theta = (U * D) @ V.T
    p = special.expit(theta)
    X = S.sample(S.Binomial(trials, p), stream.substream(2))
    return X, p, theta


def gamma_cluster_rates(task: str):
    """Per-cluster, per-column rates and the common shape for a gamma task."""
    if task == "gamma_small":
        return np.array(SMALL_GAMMA_RATES), SMALL_GAMMA_SHAPE
    if task == "gamma_large":
        K, d = 10, 100
        rates = np.ones((K, d))
        for k in range(1, K):  # 1-based cluster k = 1..9
            rates[k - 1, 10 * k - 10 : min(10 * k + 10, d)] = 0.1
        return rates, LARGE_GAMMA_SHAPE
    raise ValueError(f"unknown gamma task {task!r}")


def gen_gamma_clusters(task: str, stream: RandomStream | None = None):
    """Positive matrix with 100 rows per cluster plus 0-based true labels."""
    rates, shape = gamma_cluster_rates(task)
    labels = np.repeat(np.arange(rates.shape[0]), CLUSTER_SIZE)
    stream = RandomStream(0) if stream is None else stream
    X = S.sample(S.Gamma(shape, rates[labels]), stream)
    return X, labels


def fixed_design(cfg: RegressionSimConfig, stream: RandomStream):
    """Design for the high-leverage scenario: N(0, 1) entries except one N(5, 1) row."""
    Z = S.sample(S.Normal(0.0, 1.0), stream, (cfg.n, cfg.p))
    Z[LEVERAGE_ROW] += 5.0
    return Z


def gen_regression_data(cfg: RegressionSimConfig, stream: RandomStream, design=None):
    """``(Z, X, beta)`` with ``X | Z ~ N(Z beta, I)``.

    In the iid scenario ``Z`` is drawn fresh from ``stream``; in the
    high-leverage scenario ``design`` (or a design drawn from ``stream``) is
    reused as given.
    """
    if cfg.scenario == "iid":
        Z = S.sample(S.Normal(0.0, 1.0), stream.substream(0), (cfg.n, cfg.p))
    else:
        Z = fixed_design(cfg, stream.substream(0)) if design is None else np.asarray(design, dtype=float)
    beta = cfg.beta
    X = Z @ beta + S.sample(S.Normal(0.0, 1.0), stream.substream(1), cfg.n)
    return Z, X, beta


# ---------------------------------------------------------------------------
# thinning versus sample splitting


def _select_and_refit(Z_train, X_train, Z_test, X_test):
    """Returns ``(detected, excludes_zero or None)``; None flags an unfittable refit."""
    chosen = regression.forward_stepwise(Z_train, X_train)
    if TRACKED_COVARIATE not in chosen:
        return False, False
    fit = regression.ols_intervals(Z_test, X_test, chosen)
    if fit is None:
        return True, None
    _, lo, hi = fit
    k = chosen.index(TRACKED_COVARIATE)
    return True, bool(lo[k] > 0 or hi[k] < 0)


def _random_subset(n: int, size: int, stream: RandomStream):
    u = stream.uniform_block(n)
    return np.sort(np.argsort(u, kind="stable")[:size])


def split_comparison_replicate(cfg: RegressionSimConfig, stream: RandomStream, design=None) -> dict:
    """One replicate: the same data analysed by thinning and by sample splitting."""
    Z, X, _ = gen_regression_data(cfg, stream, design)
    x1, x2 = T.thin(X, T.Gaussian(1.0), cfg.eps, stream.substream(2))
    dt = _select_and_refit(Z, x1, Z, x2)
    n_train = cfg.n_train
    if not 0 < n_train < cfg.n:
        raise T.PlanError(f"eps * n = {cfg.eps * cfg.n:g} leaves an empty training or test set")
    train = np.zeros(cfg.n, dtype=bool)
    train[_random_subset(cfg.n, n_train, stream.substream(3))] = True
    ss = _select_and_refit(Z[train], X[train], Z[~train], X[~train])
    return {"thinning": dt, "splitting": ss}


def _summarise_arm(outcomes, n_reps):
    detected = sum(1 for d, _ in outcomes if d)
    flagged = sum(1 for d, e in outcomes if d and e is None)
    assessable = detected - flagged
    excluded = sum(1 for d, e in outcomes if d and e)
    # a flagged replicate produced no interval, so it cannot count as excluding zero
    return {
        "detection": detected / n_reps,
        "power": excluded / detected if detected else None,
        "power_assessable": excluded / assessable if assessable else None,
        "detected": detected,
        "flagged": flagged,
    }


def run_split_comparison(cfg: RegressionSimConfig, stream: RandomStream) -> SimReport:
    """Detection and power of the tracked covariate under both strategies."""
    design = fixed_design(cfg, stream.substream(DESIGN_INDEX)) if cfg.scenario == "high_leverage" else None
    outs = {"thinning": [], "splitting": []}
    for r in range(cfg.n_reps):
        res = split_comparison_replicate(cfg, stream.substream(r), design)
        for arm in outs:
            outs[arm].append(res[arm])
    metrics = {f"{arm}:{cfg.eps:g}": _summarise_arm(o, cfg.n_reps) for arm, o in outs.items()}
    return SimReport(f"split-{cfg.scenario}", stream.master_seed, cfg.n_reps, asdict(cfg), metrics)


# ---------------------------------------------------------------------------
# rank / cluster-count selection


def _task_data(task, stream):
    if task == "binomial_pca":
        X, _, _ = gen_binomial_pca_data(stream=stream)
        return X, T.Binomial(100), "pca"
    X, _ = gen_gamma_clusters(task, stream)
    _, shape = gamma_cluster_rates(task)
    return X, T.Gamma(shape), "cluster"


def selection_replicate(cfg: SelectionSimConfig, stream: RandomStream) -> dict:
    """``{(method, loss): LossCurve}`` for one simulated data set."""
    X, family, task = _task_data(cfg.task, stream.substream(0))
    out = {}
    for i, m in enumerate(cfg.methods):
        curves = SEL.cv_curves(
            X, family, cfg.candidates, SEL.Method.parse(m), task, stream.substream(1 + i), cfg.losses, cfg.restarts
        )
        for kind, c in curves.items():
            out[(m, kind)] = c
    return out


def run_selection_sim(cfg: SelectionSimConfig, stream: RandomStream | None = None) -> SimReport:
    """Selection histograms, proportion correct and mean rescaled curves per arm."""
    stream = RandomStream(cfg.seed) if stream is None else stream
    ks = np.array(cfg.candidates)
    arms = [(m, kind) for m in cfg.methods for kind in cfg.losses]
    hist = {a: np.zeros(len(ks), dtype=int) for a in arms}
    curve_sum = {a: np.zeros(len(ks)) for a in arms}
    loss_sum = {a: np.zeros(len(ks)) for a in arms}
    monotone = {a: 0 for a in arms}
    for r in range(cfg.n_reps):
        for a, c in selection_replicate(cfg, stream.substream(r)).items():
            hist[a][np.flatnonzero(ks == c.selected_k)[0]] += 1
            curve_sum[a] += c.rescaled()
            loss_sum[a] += c.mean_loss
            monotone[a] += c.is_monotone()
    metrics = {}
    for a in arms:
        correct = hist[a][ks == cfg.true_k].sum() if cfg.true_k in ks else 0
        metrics[f"{a[0]}|{a[1]}"] = {
            "method": a[0],
            "loss": a[1],
            "proportion_correct": float(correct) / cfg.n_reps,
            "monotone_fraction": monotone[a] / cfg.n_reps,
            "candidates": ks.tolist(),
            "histogram": hist[a].tolist(),
            "mean_rescaled_curve": (curve_sum[a] / cfg.n_reps).tolist(),
            "mean_loss_curve": (loss_sum[a] / cfg.n_reps).tolist(),
        }
    return SimReport(cfg.task, stream.master_seed, cfg.n_reps, asdict(cfg), metrics)
