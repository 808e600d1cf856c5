import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from castor.dataset import LabeledDataset
from castor.errors import SeriesLengthMismatch
from castor.params import DIFFERENCED, CastorConfig, fit_params
from castor.profile import distance_profile_oracle
from castor.transform import (
    aggregate_block,
    feature_layout,
    max_aggregate,
    min_aggregate,
    occurrence,
    transform,
)

DP = np.array([[0.0, 5.0, 1.0], [3.0, 2.0, 2.0]])


# Shapelet indices below are 0-based.
def test_min_aggregate_by_hand():
    assert [min_aggregate(j, DP, "hard") for j in (0, 1)] == [2, 1]
    assert [min_aggregate(j, DP, "soft") for j in (0, 1)] == [1, 2]


def test_max_aggregate_by_hand():
    assert [max_aggregate(j, DP, "hard") for j in (0, 1)] == [1, 2]
    assert [max_aggregate(j, DP, "soft") for j in (0, 1)] == [5, 5]


def test_occurrence_by_hand():
    row = np.array([[0.5, 1.2, 0.3]])
    assert occurrence(0, row, [1.0]) == 2
    assert occurrence(0, row, [0.0]) == 0


def test_ties_go_to_lowest_index():
    dp = np.ones((3, 4))
    assert min_aggregate(0, dp, "hard") == 4
    assert max_aggregate(0, dp, "hard") == 4
    assert occurrence(0, dp, [2, 2, 2], "competing") == 4
    assert occurrence(1, dp, [2, 2, 2], "competing") == 0


blocks = st.tuples(st.integers(1, 6), st.integers(1, 30), st.integers(0, 2**32 - 1))


@given(blocks)
def test_single_competitor_always_wins(block):
    _, m, seed = block
    dp = np.random.default_rng(seed).random((1, m))
    assert min_aggregate(0, dp, "hard") == m
    assert max_aggregate(0, dp, "hard") == m
    thr = [0.5]
    assert occurrence(0, dp, thr, "competing") == occurrence(0, dp, thr, "independent")


@given(blocks)
def test_block_conservation(block):
    k, m, seed = block
    rng = np.random.default_rng(seed)
    dp = rng.random((k, m)) * 10
    # duplicate a row now and then to exercise ties
    if k > 1 and seed % 3 == 0:
        dp[1] = dp[0]
    hard = aggregate_block(dp, rng.random(k) * 10, "hard", "hard", "independent")
    assert hard[:k].sum() == m
    assert hard[k : 2 * k].sum() == m
    soft = aggregate_block(dp, rng.random(k) * 10, "soft", "soft", "independent")
    assert soft[:k].sum() == pytest.approx(dp.min(axis=0).sum(), rel=1e-12)
    assert soft[k : 2 * k].sum() == pytest.approx(dp.max(axis=0).sum(), rel=1e-12)


def _oracle_features(x, params):
    """Compose the brute-force profile with the reference aggregations."""
    cfg = params.config
    rows = []
    for series in x:
        feats = []
        for bank in params.banks:
            s = np.diff(series) if bank.representation == DIFFERENCED else series
            for i in range(bank.n_groups):
                for e in range(bank.n_exponents):
                    dp = np.array(
                        [distance_profile_oracle(bank.shapelet(i, j, e), s) for j in range(bank.n_shapelets)]
                    )
                    feats.append(
                        aggregate_block(dp, bank.thresholds[i, :, e], cfg.min_mode, cfg.max_mode, cfg.occurrence_mode)
                    )
        rows.append(np.concatenate(feats))
    return np.array(rows)


@pytest.mark.parametrize(
    "changes",
    [
        {},
        {"min_mode": "hard", "max_mode": "soft", "occurrence_mode": "competing"},
        {"use_diff": False, "rho_norm": 1.0, "norm_scope": "shapelet"},
    ],
)
def test_transform_matches_reference(rng, changes):
    train = LabeledDataset(rng.normal(size=(8, 40)), [0, 1] * 4, ["a", "b"])
    params = fit_params(train, CastorConfig(n_groups=4, n_shapelets=3, seed=5, **changes))
    fresh = rng.normal(size=(3, 40))
    np.testing.assert_allclose(transform(fresh, params).values, _oracle_features(fresh, params), rtol=1e-9, atol=1e-9)


def test_feature_count_small_figure(rng):
    data = LabeledDataset(rng.normal(size=(4, 4)), [0, 1, 0, 1], ["a", "b"])
    params = fit_params(data, CastorConfig(n_groups=5, n_shapelets=4, shapelet_length=3, use_diff=False))
    assert params.banks[0].n_exponents == 1
    assert transform(data, params).shape == (4, 60)


def test_layout_matches_columns(small_data, small_config):
    params = fit_params(small_data, small_config)
    layout = feature_layout(params)
    assert len(layout) == params.n_features
    k = small_config.n_shapelets
    assert layout[0] == ("original", 0, 0, "min", 0)
    assert layout[k] == ("original", 0, 0, "max", 0)
    assert layout[3 * k][1:3] == (0, 1)
    assert layout[-1] == ("differenced", 3, params.banks[1].n_exponents - 1, "occurrence", k - 1)


def test_transform_deterministic_and_thread_invariant(small_data, small_config):
    params = fit_params(small_data, small_config)
    a = transform(small_data, params, threads=1).values
    b = transform(small_data, params, threads=1).values
    c = transform(small_data, params, threads=3).values
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_transformed_counts_conserve(small_data, small_config):
    cfg = small_config.replace(min_mode="hard", max_mode="hard")
    params = fit_params(small_data, cfg)
    X = transform(small_data, params).values
    k = cfg.n_shapelets
    col = 0
    for bank in params.banks:
        blocks = X[:, col : col + bank.n_features].reshape(len(X), -1, 3, k)
        assert np.all(blocks[:, :, 0].sum(axis=2) == bank.series_length)
        assert np.all(blocks[:, :, 1].sum(axis=2) == bank.series_length)
        col += bank.n_features


def test_zero_thresholds_give_no_occurrences(small_data, small_config):
    params = fit_params(small_data, small_config)
    banks = [dataclasses.replace(b, thresholds=np.zeros_like(b.thresholds)) for b in params.banks]
    X = transform(small_data, dataclasses.replace(params, banks=banks)).values
    kinds = np.array([c[3] for c in feature_layout(params)])
    assert np.all(X[:, kinds == "occurrence"] == 0)


def test_wrong_length_rejected(small_data, small_config):
    params = fit_params(small_data, small_config)
    with pytest.raises(SeriesLengthMismatch):
        transform(np.zeros((2, small_data.length + 1)), params)


def test_csv_export(tmp_path, small_data, small_config):
    params = fit_params(small_data, small_config)
    fm = transform(small_data.series[:2], params)
    fm.to_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0].split(",")[0] == "original:0:0:min:0"
    assert len(lines) == 3
    np.testing.assert_array_equal(np.array(lines[1].split(","), dtype=float), fm.values[0])


@given(blocks)
def test_competing_bounded_by_hard_wins(block):
    k, m, seed = block
    rng = np.random.default_rng(seed)
    dp = rng.random((k, m))
    thr = rng.random(k)
    for j in range(k):
        comp = occurrence(j, dp, thr, "competing")
        assert comp <= occurrence(j, dp, thr, "independent") <= m
        assert comp <= min_aggregate(j, dp, "hard")
