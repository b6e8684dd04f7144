import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from thinlab import diagnostics as D
from thinlab.rng import RandomStream


def _conditional_oracle(spec):
    """Moments by the law of total (co)variance, using scipy's conditional laws.

    Given X = x, fold 1 has conditional variance v(x) and mean eps * x, and
    Cov(X1, X2 | X) = -v(x), so Var(X1) = E v + eps^2 Var X and
    Cov = -E v + eps (1 - eps) Var X.
    """
    e, rt = spec.epsilon, spec.assumed
    a, b = spec.true
    if spec.family == "negbin":
        law = stats.nbinom(a, b)
        xs = np.arange(0, int(law.ppf(1 - 1e-15)) + 1)
        w = law.pmf(xs)
        v = np.array([stats.betabinom(x, e * rt, (1 - e) * rt).var() if x else 0.0 for x in xs])
        ev = float(np.sum(w * v))
    else:
        law = stats.gamma(a, scale=1 / b)
        # X1 = X * B with B ~ Beta(eps rt, (1 - eps) rt) independent of X
        ev = float(law.moment(2) * stats.beta(e * rt, (1 - e) * rt).var())
    var_x = float(law.var())
    var1 = ev + e**2 * var_x
    var2 = ev + (1 - e) ** 2 * var_x
    cov = -ev + e * (1 - e) * var_x
    return var1, var2, cov


@pytest.mark.parametrize("family,true", [("negbin", (7.0, 0.7)), ("gamma", (7.0, 5.0)), ("negbin", (2.5, 0.3))])
@pytest.mark.parametrize("assumed_factor", [0.3, 1.0, 2.2])
def test_moments_match_total_variance_oracle(family, true, assumed_factor):
    spec = D.MismatchSpec(family, true, true[0] * assumed_factor, 0.44)
    got = D.mismatch_moments(spec)
    var1, var2, cov = _conditional_oracle(spec)
    assert got["var1"] == pytest.approx(var1, rel=1e-9)
    assert got["var2"] == pytest.approx(var2, rel=1e-9)
    assert got["cov"] == pytest.approx(cov, rel=1e-9, abs=1e-12)


def test_gaussian_examples():
    m = D.mismatch_moments(D.MismatchSpec("gaussian", (7.0, 5.0), 5.0, 0.3))
    assert m["cov"] == 0 and m["corr"] == 0
    m = D.mismatch_moments(D.MismatchSpec("gaussian", (7.0, 5.0), 3.0, 0.44))
    assert m["cov"] == pytest.approx(0.4928, rel=1e-12)


def test_gamma_correct_shape_has_zero_cov():
    assert D.mismatch_moments(D.MismatchSpec("gamma", (7.0, 5.0), 7.0, 0.44))["cov"] == 0


@pytest.mark.parametrize(
    "family,true,assumed",
    [("gaussian", (7.0, 5.0), 5.0), ("negbin", (7.0, 0.7), 7.0)],
)
def test_correct_nuisance_gives_zero_empirical_corr(family, true, assumed):
    spec = D.MismatchSpec(family, true, assumed, 0.44)
    out = D.empirical_fold_stats(spec, 100_000, RandomStream(31))
    assert abs(out["corr_hat"]) < 0.01


def test_gamma_sweep_tracks_theory():
    spec = D.MismatchSpec("gamma", (7.0, 5.0), 7.0, 0.44)
    rows = D.mismatch_sweep(spec, D.default_grid(7.0, 50), 20_000, RandomStream(32))
    assert len(rows) == 50
    assert max(abs(r["corr_hat"] - r["corr_theory"]) for r in rows) < 0.04


def test_grid_contains_truth_at_zero():
    spec = D.MismatchSpec("negbin", (7.0, 0.7), 1.0, 0.44)
    rows = D.mismatch_sweep(spec, D.default_grid(7.0, 50), 100, RandomStream(33))
    assert rows[18]["nuisance"] == 7.0 and rows[18]["corr_theory"] == 0.0


def test_gaussian_theory_strictly_decreasing():
    spec = D.MismatchSpec("gaussian", (7.0, 5.0), 1.0, 0.44)
    theory = [D.mismatch_moments(spec.with_assumed(g))["corr"] for g in D.default_grid(5.0, 50)]
    assert np.all(np.diff(theory) < 0)


@given(
    st.sampled_from(["gaussian", "negbin", "gamma"]),
    st.floats(0.5, 20.0),
    st.floats(0.05, 0.95),
    st.floats(0.05, 30.0),
    st.floats(0.05, 0.95),
)
def test_covariance_sign_property(family, a, b, assumed, eps):
    true = (a, b * 10) if family == "gaussian" else (a, b)
    spec = D.MismatchSpec(family, true, assumed, eps)
    m = D.mismatch_moments(spec)
    truth = spec.true_nuisance()
    # too little thinning noise gives positive covariance: a smaller variance,
    # or a larger size / shape, than the truth
    too_little = assumed < truth if family == "gaussian" else assumed > truth
    if assumed != truth:
        assert (m["cov"] > 0) == too_little
    assert -1 <= m["corr"] <= 1


@given(st.sampled_from(["gaussian", "negbin", "gamma"]), st.floats(0.5, 20.0), st.booleans())
def test_covariance_shrinks_towards_truth(family, a, above):
    true = (a, 0.4)
    spec = D.MismatchSpec(family, true, 1.0, 0.5)
    truth = spec.true_nuisance()
    sign = 1 if above else -1
    covs = [abs(D.mismatch_moments(spec.with_assumed(truth * (1 + sign * d)))["cov"]) for d in (0.5, 0.1, 1e-3, 1e-6)]
    assert all(x > y for x, y in zip(covs, covs[1:]))
    assert D.mismatch_moments(spec.with_assumed(truth))["cov"] == 0


def test_fisher_examples():
    q = D.FisherQuery("poisson", "rate", {"rate": 2.0}, (0.3, 0.7))
    np.testing.assert_allclose(D.fisher_allocation(q), [0.15, 0.35], rtol=1e-15)
    q = D.FisherQuery("binomial", "prob", {"trials": 10, "prob": 0.5}, (0.5, 0.5))
    np.testing.assert_array_equal(D.fisher_allocation(q), [20.0, 20.0])
    with pytest.raises(D.ScopeError):
        D.FisherQuery("gaussian", "var", {"var": 1.0}, (0.5, 0.5))


def test_fisher_numerical_derivative():
    # total information as minus the expected second derivative, by finite differences
    rate, h = 3.0, 1e-4
    xs = np.arange(0, 80)
    w = stats.poisson(rate).pmf(xs)

    def expected_ll(r):
        return float(np.sum(w * stats.poisson(r).logpmf(xs)))

    info = -(expected_ll(rate + h) - 2 * expected_ll(rate) + expected_ll(rate - h)) / h**2
    assert info == pytest.approx(D.total_information("poisson", "rate", {"rate": rate}), rel=1e-5)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6), st.floats(0.5, 50.0))
def test_fisher_sum_property(weights, rate):
    eps = np.array(weights) / np.sum(weights)
    eps[-1] = 1.0 - eps[:-1].sum()
    if not np.all((eps > 0) & (eps < 1)) or abs(eps.sum() - 1) > 1e-12:
        return
    q = D.FisherQuery("poisson", "rate", {"rate": rate}, tuple(eps))
    assert np.sum(D.fisher_allocation(q)) == pytest.approx(1 / rate, rel=1e-12)


def test_splitting_examples():
    out = D.splitting_information(10, 0.2, np.ones(10))
    assert out["train_dt"] == pytest.approx(2.0) and out["train_ss"] == 2.0
    out = D.splitting_information(4, 0.5, [25.0, 1, 1, 1], train=[0, 1])
    assert out["train_ss"] == 26 and out["train_dt"] == 14
    out = D.splitting_information(5, 0.5, np.ones(5))
    assert out["train_ss"] is None and out["ss_error"] and out["train_dt"] == 2.5
