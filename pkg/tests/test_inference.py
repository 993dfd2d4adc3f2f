"""Tests for the block and maximum entropy bootstraps."""

import numpy as np
import pytest
from scipy.stats import rankdata

from robusthedging.analytics.inference import (
    BootstrapDraws,
    block_bootstrap,
    block_draws,
    meb_bootstrap,
    meb_replicate,
    pooled_bootstrap,
    sign_p_value,
)
from robusthedging.errors import InsufficientDataError, MisalignedDatesError
from robusthedging.models.backtest import BootstrapScheme


def _make_pair(n=600, shift=0.0, seed=0):
    rng = np.random.default_rng(seed)
    standard = rng.normal(0.0, 0.01, n)
    return standard + shift, standard


def _ar1(n, phi, seed):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = rng.standard_normal()
    for t in range(1, n):
        x[t] = phi * x[t - 1] + rng.standard_normal()
    return x


# ---------------------------------------------------------------------------
# p-values
# ---------------------------------------------------------------------------

def test_sign_p_value_counts_opposing_signs():
    differences = np.array([0.2, -0.1, 0.0, 0.3])
    assert sign_p_value(differences, 0.5) == 0.25
    assert sign_p_value(differences, -0.5) == 0.5
    assert sign_p_value(differences, 0.0) == 0.75


# ---------------------------------------------------------------------------
# Random block bootstrap
# ---------------------------------------------------------------------------

def test_constant_shift_pnl_difference():
    robust, standard = _make_pair(shift=0.001)
    result = block_bootstrap(robust, standard, "pnl", block_length=250, reps=2000, seed=1)
    assert result.mean_difference == pytest.approx(0.25)
    assert result.p_value == 0.0
    assert result.scheme is BootstrapScheme.RANDOM_BLOCK
    assert result.replications == 2000


def test_identical_series_give_zero_differences():
    robust, standard = _make_pair()
    draws = block_draws(standard.copy(), standard, "sharpe", block_length=100, reps=500, seed=2)
    assert not draws.differences.any()
    assert block_bootstrap(standard.copy(), standard, "sharpe", 100, 500, seed=2).p_value == 0.0


def test_block_bootstrap_deterministic_across_workers():
    robust, standard = _make_pair(shift=0.0002, seed=3)
    single = block_bootstrap(robust, standard, "es95", 100, 2500, seed=7, workers=1)
    threaded = block_bootstrap(robust, standard, "es95", 100, 2500, seed=7, workers=4)
    assert single == threaded
    assert block_bootstrap(robust, standard, "es95", 100, 2500, seed=8) != single


def test_block_longer_than_series_rejected():
    robust, standard = _make_pair(n=100)
    with pytest.raises(InsufficientDataError, match="shorter"):
        block_bootstrap(robust, standard, "pnl", block_length=250, reps=10)


def test_unequal_lengths_rejected():
    robust, standard = _make_pair(n=300)
    with pytest.raises(MisalignedDatesError):
        block_bootstrap(robust[:-1], standard, "pnl", block_length=100, reps=10)


def test_custom_metric_callable():
    robust, standard = _make_pair(shift=0.001)

    def mean_return(r):
        return np.mean(r, axis=-1)

    result = block_bootstrap(robust, standard, mean_return, 100, 200, seed=0)
    assert result.metric_name == "mean_return"
    assert result.mean_difference == pytest.approx(0.001)


# ---------------------------------------------------------------------------
# Maximum entropy bootstrap
# ---------------------------------------------------------------------------

def test_meb_replicate_preserves_ranks():
    x = _ar1(300, 0.5, seed=4)
    for seed in range(20):
        replicate = meb_replicate(x, seed)
        assert not replicate.constant
        np.testing.assert_array_equal(rankdata(replicate.values), rankdata(x))


def test_meb_constant_series_returned_unchanged():
    replicate = meb_replicate(np.full(10, 0.3), seed=1)
    assert replicate.constant
    np.testing.assert_array_equal(replicate.values, np.full(10, 0.3))


def test_meb_needs_four_observations():
    with pytest.raises(InsufficientDataError, match="4"):
        meb_replicate([1.0, 2.0, 3.0])


def test_meb_preserves_the_mean():
    x = np.random.default_rng(5).normal(1.0, 0.5, 50)
    rng = np.random.default_rng(6)
    means = [meb_replicate(x, rng).values.mean() for _ in range(10_000)]
    assert np.mean(means) == pytest.approx(x.mean(), rel=0.01)


def test_meb_retains_autocorrelation():
    x = _ar1(500, 0.7, seed=7)

    def lag1(v):
        v = v - v.mean()
        return np.dot(v[1:], v[:-1]) / np.dot(v, v)

    rng = np.random.default_rng(8)
    average = np.mean([lag1(meb_replicate(x, rng).values) for _ in range(1000)])
    assert average == pytest.approx(lag1(x), abs=0.1)


def test_meb_constant_shift_pnl_difference():
    robust, standard = _make_pair(shift=0.001, seed=9)
    result = meb_bootstrap(robust, standard, "pnl", block_length=250, reps=1000, seed=3)
    assert result.mean_difference == pytest.approx(0.25, rel=1e-9)
    assert result.p_value == 0.0
    assert result.scheme is BootstrapScheme.MAX_ENTROPY


def test_meb_identical_series_give_zero_differences():
    _, standard = _make_pair(seed=10)
    result = meb_bootstrap(standard.copy(), standard, "omega", block_length=100, reps=300, seed=4)
    assert result.mean_difference == 0.0
    assert result.p_value == 0.0


def test_meb_bootstrap_deterministic():
    robust, standard = _make_pair(shift=0.0001, seed=11)
    first = meb_bootstrap(robust, standard, "sharpe", 100, 1500, seed=5, workers=1)
    second = meb_bootstrap(robust, standard, "sharpe", 100, 1500, seed=5, workers=3)
    assert first == second


# ---------------------------------------------------------------------------
# Pooling
# ---------------------------------------------------------------------------

def test_pooled_bootstrap_averages_replications():
    draws = [
        BootstrapDraws(0.2, np.array([0.1, 0.3, -0.1])),
        BootstrapDraws(0.4, np.array([0.3, -0.5, 0.1])),
    ]
    result = pooled_bootstrap(draws, "pnl", 250, BootstrapScheme.RANDOM_BLOCK)
    assert result.sample_difference == pytest.approx(0.3)
    assert result.mean_difference == pytest.approx(0.0333333333)
    assert result.p_value == pytest.approx(1 / 3)


def test_pooled_bootstrap_needs_equal_replications():
    draws = [BootstrapDraws(0.1, np.ones(3)), BootstrapDraws(0.1, np.ones(4))]
    with pytest.raises(ValueError, match="replication count"):
        pooled_bootstrap(draws, "pnl", 250, BootstrapScheme.RANDOM_BLOCK)


def test_pooling_nothing_rejected():
    with pytest.raises(InsufficientDataError):
        pooled_bootstrap([], "pnl", 250, BootstrapScheme.MAX_ENTROPY)
