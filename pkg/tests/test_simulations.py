import numpy as np
import pytest

from thinlab import simulations as SIM
from thinlab.rng import RandomStream


def test_binomial_pca_generator():
    X, p, theta = SIM.gen_binomial_pca_data(stream=RandomStream(1))
    assert X.shape == (250, 100) and X.min() >= 0 and X.max() <= 100
    sv = np.linalg.svd(theta, compute_uv=False)
    np.testing.assert_allclose(sv[:10], np.arange(14, 4, -1), atol=1e-9)
    assert sv[10] < 1e-10
    np.testing.assert_allclose(p, 1 / (1 + np.exp(-theta)), rtol=1e-12)


def test_random_orthogonal_columns():
    U = SIM.random_orthogonal(250, 10, RandomStream(2))
    np.testing.assert_allclose(U.T @ U, np.eye(10), atol=1e-10)


def test_rank_above_dimensions_rejected():
    with pytest.raises(ValueError):
        SIM.gen_binomial_pca_data(n=5, d=4, true_rank=6, stream=RandomStream(0))


def test_gamma_small_generator():
    X, labels = SIM.gen_gamma_clusters("gamma_small", RandomStream(3))
    assert X.shape == (400, 2) and np.all(X > 0)
    assert np.bincount(labels).tolist() == [100] * 4
    rates, shape = SIM.gamma_cluster_rates("gamma_small")
    for k in range(4):
        means = X[labels == k].mean(axis=0)
        se = np.sqrt(shape) / rates[k] / 10
        assert np.all(np.abs(means - shape / rates[k]) < 4 * se)


def test_gamma_large_block_pattern():
    rates, shape = SIM.gamma_cluster_rates("gamma_large")
    assert shape == 2.0 and rates.shape == (10, 100)
    # first cluster: columns 1..20 (0-based 0..19) have mean 20
    np.testing.assert_array_equal(rates[0, :20], 0.1)
    np.testing.assert_array_equal(rates[0, 20:], 1.0)
    np.testing.assert_array_equal(rates[3, 30:50], 0.1)
    assert np.sum(rates[3] == 0.1) == 20
    X, labels = SIM.gen_gamma_clusters("gamma_large", RandomStream(4))
    assert X.shape == (1000, 100) and np.all(X > 0)
    assert np.bincount(labels).tolist() == [100] * 10


def test_regression_generator_defaults():
    cfg = SIM.RegressionSimConfig()
    assert (cfg.n, cfg.p) == (100, 20)
    np.testing.assert_array_equal(cfg.beta, [0.5] * 5 + [0.0] * 15)
    lev = SIM.RegressionSimConfig.for_scenario("high_leverage")
    assert lev.n == 42


def test_zero_signal_response_is_standard_normal():
    cfg = SIM.RegressionSimConfig(beta_star=0.0)
    X = np.concatenate([SIM.gen_regression_data(cfg, RandomStream(5).substream(r))[1] for r in range(200)])
    assert abs(X.mean()) < 4 / np.sqrt(X.size)
    assert abs(X.var() - 1) < 4 * np.sqrt(2 / X.size)


def test_regression_mean_is_linear_predictor():
    cfg = SIM.RegressionSimConfig.for_scenario("high_leverage", beta_star=1.0)
    design = SIM.fixed_design(cfg, RandomStream(6))
    reps = 100_000
    Xs = np.empty((reps, cfg.n))
    for start in range(0, reps, 10_000):
        block = [SIM.gen_regression_data(cfg, RandomStream(7).substream(r), design)[1] for r in range(start, start + 10_000)]
        Xs[start : start + 10_000] = block
    se = Xs.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(Xs.mean(axis=0) - design @ cfg.beta) < 4 * se)


def test_leverage_row_dominates_information():
    cfg = SIM.RegressionSimConfig.for_scenario("high_leverage")
    Z = SIM.fixed_design(cfg, RandomStream(8))
    share = np.sum(Z**2, axis=1)
    assert share[SIM.LEVERAGE_ROW] > 10 * np.mean(np.delete(share, SIM.LEVERAGE_ROW))


def test_zero_signal_power_is_nominal():
    cfg = SIM.RegressionSimConfig(beta_star=0.0, eps=0.5, n_reps=1000)
    m = SIM.run_split_comparison(cfg, RandomStream(9)).metrics["thinning:0.5"]
    assert m["detected"] > 50
    assert abs(m["power"] - 0.05) <= 0.03


def test_split_comparison_report_shape():
    cfg = SIM.RegressionSimConfig(n_reps=20, eps=0.8)
    rep = SIM.run_split_comparison(cfg, RandomStream(10))
    assert set(rep.metrics) == {"thinning:0.8", "splitting:0.8"}
    for m in rep.metrics.values():
        assert 0 <= m["detection"] <= 1
        assert m["power"] is None or 0 <= m["power"] <= 1
    again = SIM.run_split_comparison(cfg, RandomStream(10))
    assert again.metrics == rep.metrics


def test_leverage_split_size_rounds():
    cfg = SIM.RegressionSimConfig.for_scenario("high_leverage", eps=0.8)
    assert cfg.n_train == 34


def test_selection_report_invariants():
    cfg = SIM.SelectionSimConfig(task="gamma_small", methods=("naive", "multifold:5"), candidates=tuple(range(1, 7)), n_reps=4)
    rep = SIM.run_selection_sim(cfg)
    assert set(rep.metrics) == {f"{m}|{k}" for m in cfg.methods for k in cfg.losses}
    for m in rep.metrics.values():
        assert sum(m["histogram"]) == cfg.n_reps
        assert 0 <= m["proportion_correct"] <= 1 and 0 <= m["monotone_fraction"] <= 1
        assert all(0 <= v <= 1 for v in m["mean_rescaled_curve"])
    assert rep.metrics["naive|nll"]["monotone_fraction"] == 1.0
    assert rep.to_dict() == SIM.run_selection_sim(cfg).to_dict()


def test_selection_config_defaults():
    assert SIM.SelectionSimConfig(task="gamma_small").candidates == tuple(range(1, 11))
    assert SIM.SelectionSimConfig(task="binomial_pca").candidates == tuple(range(1, 21))
    assert SIM.SelectionSimConfig(task="gamma_large").restarts == 30
    assert SIM.SelectionSimConfig(task="gamma_small").true_k == 4
    with pytest.raises(ValueError):
        SIM.SelectionSimConfig(task="mystery")
    with pytest.raises(ValueError):
        SIM.SelectionSimConfig(methods=("bootstrap",))
