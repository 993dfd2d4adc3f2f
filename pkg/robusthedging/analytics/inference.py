"""
Bootstrap tests of robust-minus-standard metric differences.

Two resampling schemes share the same aggregation:

- random_block   contiguous blocks drawn uniformly (no wrap-around)
- max_entropy    a random block regenerated with the maximum entropy
                 bootstrap, robust and standard series driven by the same
                 uniform draws so replications stay paired

Replications are generated in fixed-size chunks, each with its own child of
the master SeedSequence, so results do not depend on the worker count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import trim_mean

from robusthedging.analytics.backtest import get_metric
from robusthedging.errors import InsufficientDataError, MisalignedDatesError
from robusthedging.models.backtest import BootstrapResult, BootstrapScheme
from robusthedging.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

BLOCK_LENGTH = 250
REPLICATIONS = 10_000
CHUNK_SIZE = 1000
MEB_TRIM = 0.10
MEB_MIN_LENGTH = 4

Metric = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BootstrapDraws:
    """Full-sample difference plus one paired difference per replication."""

    sample_difference: float
    differences: np.ndarray


class MebReplicate(NamedTuple):
    values: np.ndarray
    constant: bool


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _resolve_metric(metric: str | Metric) -> tuple[str, Metric]:
    if isinstance(metric, str):
        return metric, get_metric(metric)
    return getattr(metric, "__name__", "metric"), metric


def _check_pair(r_robust, r_standard, block_length: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(r_robust, dtype=float)
    b = np.asarray(r_standard, dtype=float)
    if a.shape != b.shape:
        raise MisalignedDatesError("robust and standard returns differ in length")
    if block_length < 1:
        raise ValueError("block_length must be at least 1")
    if a.size < block_length:
        raise InsufficientDataError(f"series of {a.size} days is shorter than the {block_length}-day block")
    return a, b


def _chunk_seeds(seed: int, reps: int) -> list[tuple[np.random.SeedSequence, int]]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    n_chunks = -(-reps // CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK_SIZE] * (n_chunks - 1) + [reps - CHUNK_SIZE * (n_chunks - 1)]
    return list(zip(children, sizes))


def sign_p_value(differences: np.ndarray, sample_difference: float) -> float:
    """Share of replications whose sign differs from the sample estimate; zero draws agree."""
    opposing = (np.sign(differences) != np.sign(sample_difference)) & (differences != 0)
    return float(np.mean(opposing))


def summarize(
    draws: BootstrapDraws,
    metric_name: str,
    block_length: int,
    scheme: BootstrapScheme,
) -> BootstrapResult:
    return BootstrapResult(
        metric_name=metric_name,
        mean_difference=float(np.mean(draws.differences)),
        p_value=sign_p_value(draws.differences, draws.sample_difference),
        replications=len(draws.differences),
        block_length=block_length,
        scheme=scheme,
        sample_difference=draws.sample_difference,
    )


# ---------------------------------------------------------------------------
# Random block bootstrap
# ---------------------------------------------------------------------------

def block_draws(
    r_robust,
    r_standard,
    metric: str | Metric,
    block_length: int = BLOCK_LENGTH,
    reps: int = REPLICATIONS,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapDraws:
    a, b = _check_pair(r_robust, r_standard, block_length)
    _, fn = _resolve_metric(metric)
    # metric of every possible block, indexed by the drawn starts
    per_start = np.asarray(fn(sliding_window_view(a, block_length))) - np.asarray(
        fn(sliding_window_view(b, block_length))
    )
    n_starts = len(per_start)

    def draw(chunk: tuple[np.random.SeedSequence, int]) -> np.ndarray:
        child, size = chunk
        return np.random.default_rng(child).integers(0, n_starts, size=size)

    starts = np.concatenate(ordered_map(draw, _chunk_seeds(seed, reps), workers))
    sample = float(fn(a) - fn(b))
    return BootstrapDraws(sample, per_start[starts])


def block_bootstrap(
    r_robust,
    r_standard,
    metric: str | Metric,
    block_length: int = BLOCK_LENGTH,
    reps: int = REPLICATIONS,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapResult:
    name, _ = _resolve_metric(metric)
    draws = block_draws(r_robust, r_standard, metric, block_length, reps, seed, workers)
    logger.info("Block bootstrap %s: %d reps of %d days", name, reps, block_length)
    return summarize(draws, name, block_length, BootstrapScheme.RANDOM_BLOCK)


# ---------------------------------------------------------------------------
# Maximum entropy bootstrap
# ---------------------------------------------------------------------------

def _meb_batch(x: np.ndarray, u_sorted: np.ndarray) -> np.ndarray:
    """MEB replicates of each row of x (rows >= 4 long) driven by sorted uniforms."""
    n = x.shape[-1]
    order = np.argsort(x, axis=-1, kind="stable")
    xs = np.take_along_axis(x, order, axis=-1)

    trim = trim_mean(np.abs(np.diff(x, axis=-1)), MEB_TRIM, axis=-1)[..., None]
    mid = (xs[..., :-1] + xs[..., 1:]) / 2.0
    z = np.concatenate([xs[..., :1] - trim, mid, xs[..., -1:] + trim], axis=-1)

    # interval means that keep the mean of the sorted data
    means = np.empty_like(xs)
    means[..., 0] = 0.75 * xs[..., 0] + 0.25 * xs[..., 1]
    means[..., 1:-1] = 0.25 * xs[..., :-2] + 0.5 * xs[..., 1:-1] + 0.25 * xs[..., 2:]
    means[..., -1] = 0.25 * xs[..., -2] + 0.75 * xs[..., -1]

    scaled = u_sorted * n
    k = np.minimum(np.floor(scaled).astype(np.int64), n - 1)
    lo = np.take_along_axis(z, k, axis=-1)
    hi = np.take_along_axis(z, k + 1, axis=-1)
    q = lo + (scaled - k) * (hi - lo)
    q = q + np.take_along_axis(means, k, axis=-1) - (lo + hi) / 2.0
    q = np.sort(q, axis=-1)

    replicate = np.empty_like(q)
    np.put_along_axis(replicate, order, q, axis=-1)
    constant = np.ptp(x, axis=-1, keepdims=True) == 0
    return np.where(constant, x, replicate)


def _sorted_uniforms(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return np.sort(rng.random(shape), axis=-1)


def meb_replicate(series: Sequence[float], seed: int | np.random.Generator = 0) -> MebReplicate:
    """One maximum entropy bootstrap replicate with the same rank ordering as ``series``."""
    x = np.asarray(series, dtype=float)
    if x.size < MEB_MIN_LENGTH:
        raise InsufficientDataError(f"MEB needs {MEB_MIN_LENGTH} observations, got {x.size}")
    if np.ptp(x) == 0:
        return MebReplicate(x.copy(), True)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return MebReplicate(_meb_batch(x, _sorted_uniforms(rng, x.shape)), False)


def meb_draws(
    r_robust,
    r_standard,
    metric: str | Metric,
    block_length: int = BLOCK_LENGTH,
    reps: int = REPLICATIONS,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapDraws:
    a, b = _check_pair(r_robust, r_standard, block_length)
    if block_length < MEB_MIN_LENGTH:
        raise InsufficientDataError(f"MEB needs blocks of at least {MEB_MIN_LENGTH} days")
    _, fn = _resolve_metric(metric)
    windows_a = sliding_window_view(a, block_length)
    windows_b = sliding_window_view(b, block_length)
    n_starts = len(windows_a)

    def draw(chunk: tuple[np.random.SeedSequence, int]) -> np.ndarray:
        child, size = chunk
        rng = np.random.default_rng(child)
        starts = rng.integers(0, n_starts, size=size)
        u = _sorted_uniforms(rng, (size, block_length))
        rep_a = _meb_batch(windows_a[starts], u)
        rep_b = _meb_batch(windows_b[starts], u)
        return np.asarray(fn(rep_a)) - np.asarray(fn(rep_b))

    differences = np.concatenate(ordered_map(draw, _chunk_seeds(seed, reps), workers))
    return BootstrapDraws(float(fn(a) - fn(b)), differences)


def meb_bootstrap(
    r_robust,
    r_standard,
    metric: str | Metric,
    block_length: int = BLOCK_LENGTH,
    reps: int = REPLICATIONS,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapResult:
    name, _ = _resolve_metric(metric)
    draws = meb_draws(r_robust, r_standard, metric, block_length, reps, seed, workers)
    logger.info("MEB bootstrap %s: %d reps of %d days", name, reps, block_length)
    return summarize(draws, name, block_length, BootstrapScheme.MAX_ENTROPY)


# ---------------------------------------------------------------------------
# Pooling across pairs
# ---------------------------------------------------------------------------

def pooled_bootstrap(
    draws: Sequence[BootstrapDraws],
    metric_name: str,
    block_length: int,
    scheme: BootstrapScheme,
) -> BootstrapResult:
    """Replication-wise average of the paired differences of several pairs."""
    if not draws:
        raise InsufficientDataError("nothing to pool")
    lengths = {len(d.differences) for d in draws}
    if len(lengths) != 1:
        raise ValueError("pooled draws must share the replication count")
    pooled = BootstrapDraws(
        sample_difference=float(np.mean([d.sample_difference for d in draws])),
        differences=np.mean(np.stack([d.differences for d in draws]), axis=0),
    )
    return summarize(pooled, metric_name, block_length, scheme)
