"""Fitted autoregressive models and their forecasts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from enum import Enum

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Transform(str, Enum):
    LEVEL = "level"
    LOG = "log"


class ThetaMode(str, Enum):
    CLOSED_FORM = "closed_form"
    EMPIRICAL = "empirical"


class ArModel(BaseModel):
    """AR(p) fit: y_t = phi0 + sum_k phi_k y_{t-k} + eta_t on the fit scale.

    HAR fits are stored in the same shape (order 5, tied coefficients) so
    every downstream operation treats them identically.
    """

    model_config = ConfigDict(frozen=True)

    label: str = ""
    kind: str = "ar"
    order: int = Field(ge=1)
    intercept: float
    coeffs: tuple[float, ...]
    noise_variance: float = Field(ge=0.0)
    horizon_error_variance: tuple[float, ...] = ()
    target_transform: Transform = Transform.LEVEL
    stationary: bool = True
    standard_errors: tuple[float, ...] = ()
    nobs: int = 0

    @model_validator(mode="after")
    def _check_shape(self) -> ArModel:
        if len(self.coeffs) != self.order:
            raise ValueError(f"expected {self.order} coefficients, got {len(self.coeffs)}")
        if any(v < 0 for v in self.horizon_error_variance):
            raise ValueError("horizon error variances must be non-negative")
        return self

    @property
    def tau_max(self) -> int:
        return len(self.horizon_error_variance)

    @property
    def phi(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


class AdfResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: float
    reject_unit_root: bool
    lag_order: int
    nobs: int
    critical_value: float


class ForecastPath(BaseModel):
    """tau-step forecast from one origin, level scale."""

    model_config = ConfigDict(frozen=True)

    origin_date: date | None = None
    tau: int = Field(ge=1)
    point: tuple[float, ...]
    integrated_point: float
    theta: float = Field(ge=0.0)
    theta_mode: ThetaMode = ThetaMode.CLOSED_FORM
    theta_scale: Transform = Transform.LEVEL

    @model_validator(mode="after")
    def _check_integration(self) -> ForecastPath:
        if len(self.point) != self.tau:
            raise ValueError("point must hold tau values")
        if not math.isclose(self.integrated_point, math.fsum(self.point), rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("integrated_point must equal the sum of point forecasts")
        return self


@dataclass(frozen=True)
class ForecastSet:
    """Out-of-sample ForecastPaths for consecutive origins, stored as arrays."""

    label: str
    tau: int
    origin_dates: pd.DatetimeIndex
    points: np.ndarray  # (n_origins, tau), level scale
    theta: float
    theta_mode: ThetaMode
    theta_scale: Transform = Transform.LEVEL

    def __post_init__(self) -> None:
        if self.points.shape != (len(self.origin_dates), self.tau):
            raise ValueError("points must be (n_origins, tau)")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")

    @property
    def integrated(self) -> np.ndarray:
        return self.points.sum(axis=1)

    def __len__(self) -> int:
        return len(self.origin_dates)

    def at(self, origins: pd.DatetimeIndex) -> ForecastSet:
        """Rows for the given origin dates (all must be present)."""
        positions = self.origin_dates.get_indexer(origins)
        if (positions < 0).any():
            raise KeyError("origin date not in forecast set")
        return ForecastSet(
            self.label, self.tau, pd.DatetimeIndex(origins), self.points[positions],
            self.theta, self.theta_mode, self.theta_scale,
        )

    def __getitem__(self, i: int) -> ForecastPath:
        point = tuple(float(v) for v in self.points[i])
        return ForecastPath(
            origin_date=self.origin_dates[i].date(),
            tau=self.tau,
            point=point,
            integrated_point=math.fsum(point),
            theta=self.theta,
            theta_mode=self.theta_mode,
            theta_scale=self.theta_scale,
        )

    def to_frame(self) -> pd.DataFrame:
        """Long CSV layout: origin_date, j, point, theta."""
        n = len(self.origin_dates)
        return pd.DataFrame(
            {
                "origin_date": np.repeat(self.origin_dates.strftime("%Y-%m-%d"), self.tau),
                "j": np.tile(np.arange(1, self.tau + 1), n),
                "point": self.points.reshape(-1),
                "theta": np.full(n * self.tau, self.theta),
            }
        )
