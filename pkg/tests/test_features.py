import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harfe.exceptions import InvalidOrderError, InvalidSizeError, SchemaVersionError, ShapeError
from harfe.features import (BiasDistribution, FeatureMap, SparseRandomFeatures, WeightDistribution,
                            evaluate_features, sample_feature_map)


def dense_oracle(fmap, X):
    # straightforward double loop over samples and features
    W = fmap.dense_weights()
    out = np.empty((X.shape[0], fmap.n_features), dtype=complex if fmap.is_complex else float)
    for k in range(X.shape[0]):
        for j in range(fmap.n_features):
            z = sum(X[k, i] * W[i, j] for i in range(fmap.d)) + fmap.biases[j]
            if fmap.activation == "sin":
                out[k, j] = np.sin(z)
            elif fmap.activation == "complex_exp":
                out[k, j] = np.exp(1j * z)
            elif fmap.activation == "relu":
                out[k, j] = max(z, 0.0)
            else:
                out[k, j] = 1.0 / (1.0 + np.exp(-z))
    return out


def test_full_order_gives_dense_mask():
    fmap = sample_feature_map(5, 50, 5, seed=1)
    assert fmap.mask().all()
    assert np.all(fmap.dense_weights() != 0)


def test_exactly_q_nonzeros_and_reproducible():
    a = sample_feature_map(20, 1000, 2, seed=7)
    b = sample_feature_map(20, 1000, 2, seed=7)
    assert np.all((a.dense_weights() != 0).sum(axis=0) == 2)
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.biases, b.biases)
    c = sample_feature_map(20, 1000, 2, seed=8)
    assert not np.array_equal(a.values, c.values)


def test_columns_do_not_depend_on_total_count():
    small = sample_feature_map(8, 10, 3, seed=3)
    large = sample_feature_map(8, 200, 3, seed=3)
    assert np.array_equal(small.indices, large.indices[:10])
    assert np.array_equal(small.values, large.values[:10])


def test_selection_frequency_is_uniform():
    d, q, n = 10, 3, 10_000
    fmap = sample_feature_map(d, n, q, WeightDistribution("gaussian", 1.0), seed=11)
    counts = np.bincount(fmap.indices.ravel(), minlength=d)
    p = q / d
    sd = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 3 * sd)
    # no dimension is picked twice within a column
    assert all(len(set(row)) == q for row in fmap.indices)


def test_pair_frequencies_match_uniform_subsets():
    d, q, n = 6, 2, 15_000
    fmap = sample_feature_map(d, n, q, seed=5)
    pairs = {}
    for i, j in fmap.indices:
        pairs[(i, j)] = pairs.get((i, j), 0) + 1
    observed = np.array(list(pairs.values()), dtype=float)
    assert observed.size == 15
    expected = n / 15
    chi2 = np.sum((observed - expected) ** 2 / expected)
    # 14 degrees of freedom; the 0.999 quantile is about 36.1
    assert chi2 < 36.1


def test_weight_and_bias_distributions():
    fmap = sample_feature_map(4, 20_000, 1, WeightDistribution("uniform", low=-1, high=1),
                              BiasDistribution("uniform", 0.0, 2 * np.pi), seed=2)
    assert fmap.values.min() >= -1 and fmap.values.max() < 1
    assert fmap.biases.min() >= 0 and fmap.biases.max() < 2 * np.pi
    assert abs(fmap.values.mean()) < 0.02
    g = sample_feature_map(4, 20_000, 1, WeightDistribution("gaussian", scale=3.0), seed=2)
    assert abs(g.values.std() - 3.0) < 0.1
    assert np.all(sample_feature_map(3, 10, 2, activation="complex_exp").biases == 0)


@pytest.mark.parametrize("d,q,n", [(3, 4, 10), (3, 0, 10)])
def test_invalid_order(d, q, n):
    with pytest.raises(InvalidOrderError):
        sample_feature_map(d, n, q)


def test_invalid_size():
    with pytest.raises(InvalidSizeError):
        sample_feature_map(3, 0, 1)


def test_sin_at_origin_is_zero_and_exp_is_one():
    fmap = sample_feature_map(4, 6, 2, bias_distribution=BiasDistribution("none"), seed=0)
    assert np.array_equal(evaluate_features(fmap, np.zeros((3, 4))), np.zeros((3, 6)))
    fexp = sample_feature_map(4, 6, 2, activation="complex_exp", seed=0)
    assert np.array_equal(evaluate_features(fexp, np.zeros((3, 4))), np.ones((3, 6), dtype=complex))


@pytest.mark.parametrize("activation", ["sin", "complex_exp", "relu", "sigmoid"])
def test_matches_dense_oracle(activation):
    rng = np.random.default_rng(0)
    fmap = sample_feature_map(6, 8, 2, activation=activation, seed=4)
    X = rng.standard_normal((4, 6))
    np.testing.assert_allclose(evaluate_features(fmap, X), dense_oracle(fmap, X), rtol=0, atol=1e-14)


def test_column_subset_and_shape_error():
    fmap = sample_feature_map(5, 12, 2, seed=1)
    X = np.random.default_rng(1).uniform(size=(7, 5))
    full = evaluate_features(fmap, X)
    np.testing.assert_array_equal(evaluate_features(fmap, X, columns=[3, 0, 11]), full[:, [3, 0, 11]])
    with pytest.raises(ShapeError):
        evaluate_features(fmap, X[:, :4])


def test_rows_are_independent():
    fmap = sample_feature_map(5, 30, 3, seed=9)
    X = np.random.default_rng(2).normal(size=(10, 5))
    full = evaluate_features(fmap, X)
    np.testing.assert_array_equal(evaluate_features(fmap, X[4:5]), full[4:5])


def test_feature_map_is_immutable():
    fmap = sample_feature_map(3, 4, 2)
    with pytest.raises(ValueError):
        fmap.values[0, 0] = 1.0


def test_json_round_trip_is_exact():
    fmap = sample_feature_map(7, 40, 3, WeightDistribution("uniform", low=-2, high=2), seed=123)
    back = FeatureMap.from_json(fmap.to_json())
    for name in ("indices", "values", "biases"):
        assert np.array_equal(getattr(back, name), getattr(fmap, name))
    assert (back.d, back.q, back.activation, back.seed) == (7, 3, "sin", 123)
    assert back.weight_distribution == fmap.weight_distribution
    doc = json.loads(fmap.to_json())
    assert doc["N"] == 40 and len(doc["columns"]) == 40


def test_unknown_schema_version_rejected():
    doc = sample_feature_map(3, 4, 2).to_dict()
    doc["schema_version"] += 1
    with pytest.raises(SchemaVersionError):
        FeatureMap.from_dict(doc)


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 12), q=st.integers(1, 12), n=st.integers(1, 60), seed=st.integers(0, 2**32))
def test_sampling_invariants(d, q, n, seed):
    q = min(q, d)
    fmap = sample_feature_map(d, n, q, seed=seed)
    assert fmap.indices.shape == (n, q)
    assert np.all((fmap.mask()).sum(axis=0) == q)
    assert np.all(np.diff(fmap.indices, axis=1) > 0)


def test_transformer_api():
    X = np.random.default_rng(3).uniform(size=(20, 4))
    tr = SparseRandomFeatures(n_features=15, order=2, random_state=5)
    A = tr.fit_transform(X)
    assert A.shape == (20, 15)
    np.testing.assert_array_equal(A, evaluate_features(tr.feature_map_, X))
    assert tr.get_params()["n_features"] == 15
