"""Hedging types: the box uncertainty set and hedge-ratio paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator


class UncertaintyBox(BaseModel):
    """Variances vary in [sigma^2 - theta, sigma^2 + theta]; the covariance is fixed."""

    model_config = ConfigDict(frozen=True)

    sigma_S_sq: float = Field(gt=0.0)
    sigma_F_sq: float = Field(gt=0.0)
    sigma_SF: float
    theta_S: float = Field(default=0.0, ge=0.0)
    theta_F: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_denominator(self) -> UncertaintyBox:
        if self.sigma_F_sq + self.theta_F <= 0:
            raise ValueError("sigma_F_sq + theta_F must be positive")
        return self

    def corners(self) -> list[tuple[float, float]]:
        """The four (sigma_S^2, sigma_F^2) vertices of the box."""
        s_lo, s_hi = self.sigma_S_sq - self.theta_S, self.sigma_S_sq + self.theta_S
        f_lo, f_hi = self.sigma_F_sq - self.theta_F, self.sigma_F_sq + self.theta_F
        return [(s_lo, f_lo), (s_lo, f_hi), (s_hi, f_lo), (s_hi, f_hi)]


@dataclass(frozen=True)
class HedgePath:
    """Hedge ratios decided at each origin date t, held over (t, t + tau]."""

    label: str
    dates: pd.DatetimeIndex
    h_standard: np.ndarray
    h_robust: np.ndarray
    theta_used: np.ndarray
    tau: int

    def __post_init__(self) -> None:
        n = len(self.dates)
        if not (len(self.h_standard) == len(self.h_robust) == len(self.theta_used) == n):
            raise ValueError("hedge path arrays must share the date vector length")
        if (self.theta_used < 0).any():
            raise ValueError("theta_used must be non-negative")

    def __len__(self) -> int:
        return len(self.dates)

    def ratios(self, which: str) -> np.ndarray:
        if which == "standard":
            return self.h_standard
        if which == "robust":
            return self.h_robust
        raise ValueError(f"unknown hedge method '{which}'")

    def to_frame(self) -> pd.DataFrame:
        """CSV layout: date, h_standard, h_robust, theta, tau."""
        return pd.DataFrame(
            {
                "date": self.dates.strftime("%Y-%m-%d"),
                "h_standard": self.h_standard,
                "h_robust": self.h_robust,
                "theta": self.theta_used,
                "tau": np.full(len(self.dates), self.tau, dtype=np.int64),
            }
        )
