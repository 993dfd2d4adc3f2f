"""
Minimum-variance hedging under box uncertainty on the two variances.

The worst case over the box is always the upper corner, so the min-max
problem collapses to an ordinary quadratic in h with the hedging
instrument's variance inflated by Theta_F.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from robusthedging.errors import ConfigError, MisalignedDatesError, ZeroDenominatorError
from robusthedging.models.forecast import ForecastPath, ForecastSet, Transform
from robusthedging.models.hedge import HedgePath, UncertaintyBox

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12


def worst_case_variance(h: float, box: UncertaintyBox) -> float:
    return (box.sigma_S_sq + box.theta_S) + h * h * (box.sigma_F_sq + box.theta_F) - 2.0 * h * box.sigma_SF


def robust_hedge_ratio(box: UncertaintyBox) -> float:
    """sigma_SF / (sigma_F^2 + Theta_F). Independent of Theta_S."""
    denominator = box.sigma_F_sq + box.theta_F
    if denominator <= 0:
        raise ZeroDenominatorError("sigma_F^2 + theta_F must be positive")
    return box.sigma_SF / denominator


def grid_minmax_oracle(
    box: UncertaintyBox,
    h_range: tuple[float, float] = (-5.0, 5.0),
    h_step: float = 1e-4,
) -> float:
    """Brute-force argmin over a grid of h of the max over the box corners."""
    lo, hi = h_range
    n = int(round((hi - lo) / h_step)) + 1
    grid = lo + h_step * np.arange(n)
    objective = np.full(n, -np.inf)
    for s_sq, f_sq in box.corners():
        objective = np.maximum(objective, s_sq + grid * grid * f_sq - 2.0 * grid * box.sigma_SF)
    return float(grid[np.argmin(objective)])


def _as_forecast_set(forecasts: ForecastSet | Sequence[ForecastPath]) -> ForecastSet:
    if isinstance(forecasts, ForecastSet):
        return forecasts
    paths = list(forecasts)
    if not paths:
        raise ValueError("no forecasts supplied")
    first = paths[0]
    return ForecastSet(
        label="",
        tau=first.tau,
        origin_dates=pd.DatetimeIndex([p.origin_date for p in paths]),
        points=np.array([p.point for p in paths], dtype=float),
        theta=first.theta,
        theta_mode=first.theta_mode,
        theta_scale=first.theta_scale,
    )


def hedge_path(
    forecasts_F: ForecastSet | Sequence[ForecastPath],
    forecasts_SF: ForecastSet | Sequence[ForecastPath],
    tau: int | None = None,
    variance_floor: float = VARIANCE_FLOOR,
    label: str = "",
) -> HedgePath:
    """Standard and robust ratios from integrated tau-step RV_F and RCV_SF forecasts."""
    f = _as_forecast_set(forecasts_F)
    sf = _as_forecast_set(forecasts_SF)
    tau = tau or f.tau
    if f.tau != tau or sf.tau != tau:
        raise ValueError(f"forecast horizons ({f.tau}, {sf.tau}) do not match tau={tau}")
    if not f.origin_dates.equals(sf.origin_dates):
        raise MisalignedDatesError("RV_F and RCV_SF forecasts have different origins", pair=label or None)
    if f.theta_scale is not Transform.LEVEL:
        raise ConfigError("theta of the hedging variance must be on the level scale", pair=label or None)

    variance = f.integrated
    low = variance < variance_floor
    if low.any():
        logger.warning(
            "%s: %d integrated variance forecast(s) below %.1e clamped",
            label or f.label, int(low.sum()), variance_floor,
        )
        variance = np.where(low, variance_floor, variance)

    covariance = sf.integrated
    theta = np.full(len(variance), f.theta)
    return HedgePath(
        label=label,
        dates=f.origin_dates,
        h_standard=covariance / variance,
        h_robust=covariance / (variance + theta),
        theta_used=theta,
        tau=tau,
    )
