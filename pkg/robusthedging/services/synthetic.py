"""
Synthetic intraday datasets with known realized-variance dynamics.

Log realized variance of each symbol follows a stationary AR process. The
day's correlation matrix is the class-block correlation shrunk toward the
identity by a weight whose logit follows its own AR process. Each day's
intraday returns are built from an orthonormal frame so their realized
second moments match that matrix exactly, then rescaled so the day's realized
variance (including the M / (M - 1) correction for the first interval having
no predecessor) equals its target. Fitting an AR model to the emitted RV, or
to the logit of the emitted correlation weight, therefore recovers the
generating parameters without measurement noise.
"""

from __future__ import annotations

import json
import logging
from itertools import permutations
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from robusthedging.analytics.ts_models import is_stationary
from robusthedging.config import dump_config
from robusthedging.errors import InvalidSpecError
from robusthedging.schemas.config import PairSpec, PipelineConfig, SyntheticSpec
from robusthedging.services.artifacts import ArtifactWriter

logger = logging.getLogger(__name__)

OVERNIGHT_VARIANCE_SHARE = 0.25
PRICE_FORMAT = "%.12g"


def class_correlation(spec: SyntheticSpec) -> np.ndarray:
    classes = np.array([s.asset_class for s in spec.symbols])
    same = classes[:, None] == classes[None, :]
    corr = np.where(same, spec.within_class_correlation, spec.across_class_correlation)
    np.fill_diagonal(corr, 1.0)
    return corr


def _check_spec(spec: SyntheticSpec) -> np.ndarray:
    for symbol in spec.symbols:
        if not is_stationary(symbol.phi) and not spec.allow_nonstationary:
            raise InvalidSpecError(f"log-RV dynamics of {symbol.name} are not stationary", symbol=symbol.name)
    if not is_stationary(spec.correlation_dynamics.phi) and not spec.allow_nonstationary:
        raise InvalidSpecError("correlation weight dynamics are not stationary")
    if len(spec.symbols) > spec.window.M - 1:
        raise InvalidSpecError(
            f"{len(spec.symbols)} symbols need at least as many intraday intervals, window has {spec.window.M - 1}"
        )
    corr = class_correlation(spec)
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise InvalidSpecError("class correlation matrix is not positive definite") from None


def _simulate_ar(phi: list[float], noise_variance: float, mean: float, spec: SyntheticSpec,
                 rng: np.random.Generator) -> np.ndarray:
    """One AR path of length n_days around ``mean`` after burn-in."""
    coeffs = np.asarray(phi, dtype=float)
    p = len(coeffs)
    total = spec.n_days + spec.burn_in
    shocks = rng.normal(0.0, np.sqrt(noise_variance), size=total)
    dev = np.zeros(total + p)
    for t in range(total):
        dev[p + t] = coeffs @ dev[t:p + t][::-1] + shocks[t]
    return mean + dev[p + spec.burn_in:]


def _simulate_log_rv(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """(n_days, n_symbols) log realized variances after burn-in."""
    out = np.empty((spec.n_days, len(spec.symbols)))
    for col, symbol in enumerate(spec.symbols):
        out[:, col] = _simulate_ar(symbol.phi, symbol.noise_variance, symbol.mean_log_rv, spec, rng)
    return out


def correlation_weights(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Daily weight on the class correlation, in (0, 1)."""
    dynamics = spec.correlation_dynamics
    path = _simulate_ar(dynamics.phi, dynamics.noise_variance, float(logit(dynamics.median_weight)), spec, rng)
    return expit(path)


def daily_correlation(corr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """(n_days, n, n) stack of w_t * corr + (1 - w_t) * I."""
    eye = np.eye(len(corr))
    return weights[:, None, None] * corr + (1.0 - weights)[:, None, None] * eye


def _intraday_frames(corr: np.ndarray, n_ret: int, rng: np.random.Generator) -> np.ndarray:
    """(n_days, n_ret, n) draws whose cross products equal each day's correlation exactly."""
    n_days, n_sym = corr.shape[0], corr.shape[1]
    if n_days == 0:
        return np.empty((0, n_ret, n_sym))
    # convex mix of a PD matrix and I stays PD
    chol = np.linalg.cholesky(corr)
    frame, _ = np.linalg.qr(rng.standard_normal((n_days, n_ret, n_sym)))
    return frame @ np.swapaxes(chol, 1, 2)


def _bar_times(spec: SyntheticSpec) -> list[str]:
    window = spec.window
    minutes = window.start_minute + window.interval_minutes * np.arange(1, window.M + 1)
    return [f"{m // 60:02d}:{m % 60:02d}" for m in minutes]


def truth(spec: SyntheticSpec) -> dict:
    """Generating parameters in the intercept form the AR fitter reports."""
    dynamics = spec.correlation_dynamics
    mean_logit = float(logit(dynamics.median_weight))
    return {
        "n_days": spec.n_days,
        "seed": spec.seed,
        "M": spec.window.M,
        "symbols": {
            s.name: {
                "asset_class": s.asset_class,
                "intercept": s.mean_log_rv * (1.0 - float(np.sum(s.phi))),
                "coeffs": list(s.phi),
                "noise_variance": s.noise_variance,
                "mean_log_rv": s.mean_log_rv,
            }
            for s in spec.symbols
        },
        "correlation": class_correlation(spec).tolist(),
        "correlation_dynamics": {
            "median_weight": dynamics.median_weight,
            "mean_logit": mean_logit,
            "intercept": mean_logit * (1.0 - float(np.sum(dynamics.phi))),
            "coeffs": list(dynamics.phi),
            "noise_variance": dynamics.noise_variance,
        },
    }

def default_config(spec: SyntheticSpec, data_dir: str) -> PipelineConfig:
    names = [s.name for s in spec.symbols]
    return PipelineConfig(
        data_dir=data_dir,
        symbols=names,
        pairs=[PairSpec(hedged=a, hedging=b) for a, b in permutations(names, 2)],
        window=spec.window,
        asset_classes={s.name: s.asset_class for s in spec.symbols},
        bootstrap={"seed": spec.seed},
    )


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> ArtifactWriter:
    """Write SYMBOL.csv bar files, truth.json and config.yaml under ``out_dir``."""
    chol = _check_spec(spec)
    rng = np.random.default_rng(spec.seed)
    writer = ArtifactWriter(out_dir)
    n_sym = len(spec.symbols)
    M = spec.window.M
    n_ret = M - 1

    days = pd.bdate_range(spec.start_date, periods=spec.n_days)
    rv = np.exp(_simulate_log_rv(spec, rng)) if spec.n_days else np.empty((0, n_sym))

    weights = correlation_weights(spec, rng)
    z = _intraday_frames(daily_correlation(class_correlation(spec), weights), n_ret, rng)
    # scale so (M / (M - 1)) * sum r^2 == target RV
    scale = np.sqrt(rv * n_ret / M / np.maximum(np.sum(z * z, axis=1), 1e-300))
    intraday = z * scale[:, None, :]
    overnight = (rng.standard_normal((spec.n_days, n_sym)) @ chol.T) * np.sqrt(OVERNIGHT_VARIANCE_SHARE * rv)

    day_move = overnight + intraday.sum(axis=1)
    start_prices = np.log([s.start_price for s in spec.symbols])
    open_log = start_prices + np.vstack([np.zeros((1, n_sym)), np.cumsum(day_move, axis=0)[:-1]]) + overnight
    log_price = open_log[:, None, :] + np.concatenate(
        [np.zeros((spec.n_days, 1, n_sym)), np.cumsum(intraday, axis=1)], axis=1
    )

    times = _bar_times(spec)
    date_col = np.repeat(days.strftime("%Y-%m-%d").to_numpy(), M)
    time_col = np.tile(times, spec.n_days)
    for col, symbol in enumerate(spec.symbols):
        close = np.exp(log_price[:, :, col]).reshape(-1)
        opens = np.concatenate([close[:1], close[:-1]])
        bars = pd.DataFrame(
            {
                "date": pd.Series(date_col, dtype=object),
                "time": pd.Series(time_col, dtype=object),
                "open": opens,
                "high": np.maximum(opens, close),
                "low": np.minimum(opens, close),
                "close": close,
                "volume": np.full(len(close), 1000, dtype=np.int64),
            }
        )
        writer.write_table(f"{symbol.name}.csv", bars, "bars", float_format=PRICE_FORMAT)

    writer.write_document("truth.json", json.dumps(truth(spec), indent=2, sort_keys=True), "truth")
    writer.write_document("config.yaml", dump_config(default_config(spec, str(out_dir))), "config")
    logger.info("Synthetic dataset: %d symbols x %d days -> %s", n_sym, spec.n_days, out_dir)
    return writer
