"""
Out-of-sample hedged returns, hedge effectiveness and performance metrics.

Demonstrates:
- Rebalancing every tau days with daily evaluation and |dh| * bp costs
- HE / HE_C / HE_R effectiveness measures with a left-tail threshold delta
- A metric registry that works on one series or on a (reps, n) block of
  bootstrap replications along the last axis
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
import pandas as pd

from robusthedging.errors import (
    DataError,
    EmptyConditionError,
    InsufficientDataError,
    MisalignedDatesError,
    ZeroDenominatorError,
)
from robusthedging.models.backtest import Effectiveness, HedgedReturns, MetricsReport
from robusthedging.models.hedge import HedgePath
from robusthedging.models.series import RealizedSeries

logger = logging.getLogger(__name__)

ANNUALIZATION = 252
OMEGA_CAP = 1e6
MIN_REPORT_OBSERVATIONS = 30
HEDGE_METHODS = ("standard", "robust")


# ---------------------------------------------------------------------------
# Hedged portfolio
# ---------------------------------------------------------------------------

def hedged_returns(
    r_S: RealizedSeries,
    r_F: RealizedSeries,
    path: HedgePath,
    which: str,
    bp: float,
) -> HedgedReturns:
    """
    R_h = R_S - h R_F on the trading day after each hedge origin.

    The ratio set at origin k * tau is held for tau days. Costs are |dh| * bp on
    rebalance days, with the opening trade charged |h_0| * bp.
    """
    if bp < 0:
        raise ValueError("bp must be non-negative")
    h = path.ratios(which)
    n = len(path)
    positions = r_S.dates.get_indexer(path.dates)
    if (positions < 0).any() or (positions + 1 >= len(r_S)).any():
        missing = path.dates[(positions < 0) | (positions + 1 >= len(r_S))][0]
        raise MisalignedDatesError(
            "hedge origin has no following return", pair=path.label or None, date=missing.date()
        )
    eval_dates = r_S.dates[positions + 1]
    f_positions = r_F.dates.get_indexer(eval_dates)
    if (f_positions < 0).any():
        missing = eval_dates[f_positions < 0][0]
        raise MisalignedDatesError(
            "hedging instrument has no return on evaluation date", pair=path.label or None, date=missing.date()
        )
    rs = r_S.to_numpy()[positions + 1]
    rf = r_F.to_numpy()[f_positions]

    k = np.arange(n)
    tau = path.tau
    h_applied = h[(k // tau) * tau]
    rebalance = k % tau == 0
    costs = np.zeros(n)
    costs[rebalance] = np.abs(np.diff(h[rebalance], prepend=0.0)) * bp
    r_hedged = rs - h_applied * rf
    return HedgedReturns(
        dates=pd.DatetimeIndex(eval_dates),
        r_unhedged=rs,
        r_hedged=r_hedged,
        r_net=r_hedged - costs,
        costs=costs,
        h_applied=h_applied,
        bp=bp,
        opening_cost=float(costs[0]) if n else 0.0,
    )


# ---------------------------------------------------------------------------
# Effectiveness
# ---------------------------------------------------------------------------

def hedge_effectiveness(r_h, r_S) -> float:
    """1 - Var(r_h) / Var(r_S) with sample variances."""
    r_h, r_S = np.asarray(r_h, dtype=float), np.asarray(r_S, dtype=float)
    if len(r_S) < 2:
        raise InsufficientDataError("hedge effectiveness needs 2 observations")
    var_s = np.var(r_S, ddof=1)
    if var_s == 0:
        raise ZeroDenominatorError("unhedged returns have zero variance")
    return float(1.0 - np.var(r_h, ddof=1) / var_s)


def _tail(r_h, r_S, delta: float, minimum: int) -> tuple[np.ndarray, np.ndarray]:
    r_h, r_S = np.asarray(r_h, dtype=float), np.asarray(r_S, dtype=float)
    mask = r_S < delta
    if mask.sum() < minimum:
        raise EmptyConditionError(f"{int(mask.sum())} date(s) with r_S < {delta:g}, need {minimum}")
    return r_h[mask], r_S[mask]


def conditional_hedge_effectiveness(r_h, r_S, delta: float) -> float:
    h_tail, s_tail = _tail(r_h, r_S, delta, 2)
    var_s = np.var(s_tail, ddof=1)
    if var_s == 0:
        raise ZeroDenominatorError("conditional unhedged variance is zero")
    return float(1.0 - np.var(h_tail, ddof=1) / var_s)


def tail_return_ratio(r_h, r_S, delta: float) -> float:
    h_tail, s_tail = _tail(r_h, r_S, delta, 1)
    mean_s = s_tail.mean()
    if mean_s == 0:
        raise ZeroDenominatorError("conditional mean unhedged return is zero")
    return float(h_tail.mean() / mean_s)


def quartile_threshold(r_S) -> float:
    r = np.asarray(r_S, dtype=float)
    if r.size == 0:
        raise InsufficientDataError("quartile of an empty series")
    return float(np.quantile(r, 0.25))


def effectiveness_report(returns: HedgedReturns, delta: float | None = None) -> Effectiveness:
    """HE, HE_C and HE_R of the cost-free hedged returns."""
    if delta is None:
        delta = quartile_threshold(returns.r_unhedged)
    return Effectiveness(
        HE=hedge_effectiveness(returns.r_hedged, returns.r_unhedged),
        HE_C=conditional_hedge_effectiveness(returns.r_hedged, returns.r_unhedged, delta),
        HE_R=tail_return_ratio(returns.r_hedged, returns.r_unhedged, delta),
        delta_threshold=delta,
    )


# ---------------------------------------------------------------------------
# Performance metrics (vectorized over the last axis)
# ---------------------------------------------------------------------------

def pnl(r: np.ndarray) -> np.ndarray:
    return np.sum(r, axis=-1)


def sharpe(r: np.ndarray, annualization: int = ANNUALIZATION) -> np.ndarray:
    """mean / std * sqrt(annualization); NaN where the std is zero."""
    std = np.std(r, axis=-1, ddof=1)
    mean = np.mean(r, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(std > 0, mean / np.where(std > 0, std, 1.0) * np.sqrt(annualization), np.nan)


def omega(r: np.ndarray, cap: float = OMEGA_CAP) -> np.ndarray:
    """Gains over losses around a zero benchmark, capped when there are no losses."""
    gains = np.sum(np.maximum(r, 0.0), axis=-1)
    losses = np.sum(np.maximum(-r, 0.0), axis=-1)
    ratio = gains / np.where(losses > 0, losses, 1.0)
    return np.where(losses > 0, np.minimum(ratio, cap), cap)


def max_drawdown(r: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(r, axis=-1)
    zeros = np.zeros(cumulative.shape[:-1] + (1,))
    peak = np.maximum.accumulate(np.concatenate([zeros, cumulative], axis=-1), axis=-1)[..., 1:]
    return np.max(peak - cumulative, axis=-1)


def var95(r: np.ndarray) -> np.ndarray:
    """Loss-positive 95% VaR: minus the empirical 5th percentile."""
    return -np.quantile(r, 0.05, axis=-1, method="inverted_cdf")


def es95(r: np.ndarray) -> np.ndarray:
    """Mean loss over the losses at or beyond VaR."""
    losses = -np.asarray(r, dtype=float)
    threshold = np.expand_dims(var95(r), -1)
    tail = losses >= threshold
    return np.sum(np.where(tail, losses, 0.0), axis=-1) / np.sum(tail, axis=-1)


METRICS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "pnl": pnl,
    "sharpe": sharpe,
    "omega": omega,
    "max_drawdown": max_drawdown,
    "var95": var95,
    "es95": es95,
}


def get_metric(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric '{name}'; expected one of {sorted(METRICS)}") from None


def performance_report(
    returns: HedgedReturns,
    delta: float | None = None,
    annualization: int = ANNUALIZATION,
    omega_cap: float = OMEGA_CAP,
) -> MetricsReport:
    if len(returns) < MIN_REPORT_OBSERVATIONS:
        raise InsufficientDataError(
            f"performance report needs {MIN_REPORT_OBSERVATIONS} observations, got {len(returns)}"
        )
    r = returns.r_net
    sr = float(sharpe(r, annualization))
    if np.isnan(sr):
        raise ZeroDenominatorError("net returns have zero standard deviation")
    capped = not (r < 0).any()
    if capped:
        logger.warning("No losing days: omega capped at %g", omega_cap)
    effectiveness = effectiveness_report(returns, delta)
    return MetricsReport(
        HE=effectiveness.HE,
        HE_C=effectiveness.HE_C,
        HE_R=effectiveness.HE_R,
        pnl=float(pnl(r)),
        sharpe=sr,
        omega=float(omega(r, omega_cap)),
        max_drawdown=float(max_drawdown(r)),
        var95=float(var95(r)),
        es95=float(es95(r)),
        delta_threshold=effectiveness.delta_threshold,
        cost_bp=returns.bp * 1e4,
        total_costs=float(returns.costs.sum()),
        omega_capped=capped,
    )


# ---------------------------------------------------------------------------
# Cross-method summaries
# ---------------------------------------------------------------------------

def hedge_ratio_dispersion(path: HedgePath) -> dict[str, float]:
    """Mean and sample std of both ratio paths."""
    if len(path) < 2:
        raise InsufficientDataError("dispersion needs 2 hedge dates", pair=path.label or None)
    return {
        "mean_standard": float(np.mean(path.h_standard)),
        "std_standard": float(np.std(path.h_standard, ddof=1)),
        "mean_robust": float(np.mean(path.h_robust)),
        "std_robust": float(np.std(path.h_robust, ddof=1)),
    }


REPORT_KEYS = ["pair", "model", "tau", "bp"]
DIFFERENCE_METRICS = ["pnl", "sharpe", "omega", "max_drawdown", "var95", "es95"]


def metric_differences(report: pd.DataFrame, metrics: list[str] | None = None) -> pd.DataFrame:
    """Robust minus standard for every (pair, model, tau, bp) cell of a report table."""
    metrics = metrics or DIFFERENCE_METRICS
    by_method = {
        method: report[report["method"] == method].set_index(REPORT_KEYS)[metrics]
        for method in HEDGE_METHODS
    }
    standard, robust = by_method["standard"], by_method["robust"]
    unmatched = standard.index.symmetric_difference(robust.index)
    if len(unmatched):
        raise DataError("report cell has no counterpart method", pair=unmatched[0][0])
    diff = robust - standard.loc[robust.index]
    return diff.reset_index()
