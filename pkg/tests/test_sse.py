import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from thinlab import sse


def test_rank_one_zero_error():
    Y = np.outer([1.0, 2.0, 3.0], [4.0, -1.0])
    assert sse.sse_curve(Y, 1)["sse"][0] == pytest.approx(0.0, abs=1e-9)


def test_random_matrix_identity():
    Y = np.random.default_rng(0).normal(size=(5, 4))
    out = sse.sse_curve(Y, 4)
    scale = np.sum(Y**2)
    assert np.all(np.abs(out["sse"] - out["identity"]) <= 1e-8 * scale)
    assert out["sse"][-1] == pytest.approx(0.0, abs=1e-8)


def test_sse_against_lowrank_oracle():
    Y = np.random.default_rng(1).normal(size=(7, 5))
    U, D, Vt = np.linalg.svd(Y)
    for k in range(1, 6):
        oracle = np.sum((Y - U[:, :k] @ np.diag(D[:k]) @ Vt[:k]) ** 2)
        assert sse.sse_curve(Y, 5)["sse"][k - 1] == pytest.approx(oracle, rel=1e-10, abs=1e-12)


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12), elements=st.floats(-100, 100)))
def test_identity_property(Y):
    out = sse.sse_curve(Y, min(Y.shape))
    scale = max(np.sum(Y**2), 1e-300)
    assert np.all(np.abs(out["sse"] - out["identity"]) <= 1e-8 * scale + 1e-300)
    assert np.all(np.diff(out["sse"]) <= 1e-8 * scale)


def test_k_max_validated():
    with pytest.raises(ValueError):
        sse.sse_curve(np.ones((3, 2)), 3)


def test_heldout_curve_equals_training_curve_on_same_matrix():
    Y = np.random.default_rng(2).normal(size=(6, 4))
    np.testing.assert_allclose(sse.heldout_sse_curve(Y, Y, 4), sse.sse_curve(Y, 4)["sse"], atol=1e-12)


def test_standardize_examples():
    col = np.array([-1.0, 0.0, 1.0])
    Z, flagged = sse.standardize_columns(np.column_stack([col, np.full(3, 4.0)]))
    np.testing.assert_allclose(Z[:, 0], col, atol=1e-12)
    np.testing.assert_array_equal(Z[:, 1], 0.0)
    assert flagged.tolist() == [1]


def test_standardize_random():
    Y = np.random.default_rng(3).normal(5, 3, size=(10, 3))
    Z, flagged = sse.standardize_columns(Y)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-12)
    assert np.all(np.abs(Z.std(axis=0, ddof=1) - 1) < 1e-12)
    assert flagged.size == 0


def test_standardize_needs_two_rows():
    with pytest.raises(ValueError):
        sse.standardize_columns(np.ones((1, 3)))


def test_log_normalize():
    counts = np.array([[1, 3], [0, 0]])
    out = sse.log_normalize(counts)
    np.testing.assert_allclose(out[0], np.log1p(np.array([0.25, 0.75]) * 1e4))
    np.testing.assert_array_equal(out[1], 0.0)
