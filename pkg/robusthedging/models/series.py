"""
Market data types: the intraday bar grid and daily realized series.

- TradingWindow   the intraday grid (10:00-15:30, 5-minute intervals, M = 66)
- IntradayBarSeries   per-symbol bars snapped to that grid, one frame for all days
- RealizedSeries  a daily series of RV, RCV or close-to-close returns
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, time
from enum import Enum

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator


# ---------------------------------------------------------------------------
# Trading window – the interval grid i = 0..M-1
# ---------------------------------------------------------------------------
class TradingWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    start_time: time = time(10, 0)
    end_time: time = time(15, 30)
    interval_minutes: int = Field(default=5, ge=1)

    @model_validator(mode="after")
    def _check_order(self) -> TradingWindow:
        if self.end_time <= self.start_time:
            raise ValueError("end_time must be after start_time")
        if self.M < 1:
            raise ValueError("window shorter than one interval")
        return self

    @property
    def start_minute(self) -> int:
        return self.start_time.hour * 60 + self.start_time.minute

    @property
    def end_minute(self) -> int:
        return self.end_time.hour * 60 + self.end_time.minute

    @property
    def M(self) -> int:
        return (self.end_minute - self.start_minute) // self.interval_minutes

    def interval_of(self, minute_of_day: np.ndarray) -> np.ndarray:
        """Snap bar end times to interval indices; -1 marks a bar outside the window.

        A bar stamped HH:MM belongs to the interval ending at HH:MM, so 10:05
        is interval 0 (10:00-10:05) and 15:30 is interval M-1.
        """
        offset = np.asarray(minute_of_day, dtype=np.int64) - self.start_minute
        idx = -((-offset) // self.interval_minutes) - 1  # ceil(offset / len) - 1
        return np.where((idx >= 0) & (idx < self.M), idx, -1)


# ---------------------------------------------------------------------------
# Intraday bars
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IntradayBarSeries:
    """Bars of one symbol. ``bars`` has columns date, interval, close sorted by (date, interval).

    ``days`` lists every trading date present in the source file, including
    days whose bars all fell outside the window.
    """

    symbol: str
    days: tuple[date, ...]
    bars: pd.DataFrame

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise ValueError(f"{self.symbol}: days must be strictly increasing")
        if len(self.bars):
            if (self.bars["close"] <= 0).any():
                raise ValueError(f"{self.symbol}: close prices must be positive")
            same_day = self.bars["date"].to_numpy()[1:] == self.bars["date"].to_numpy()[:-1]
            steps = np.diff(self.bars["interval"].to_numpy())
            if (steps[same_day] <= 0).any():
                raise ValueError(f"{self.symbol}: interval indices must increase within a day")

    def bars_on(self, day: date) -> pd.DataFrame:
        return self.bars[self.bars["date"] == pd.Timestamp(day)]


# ---------------------------------------------------------------------------
# Daily realized series
# ---------------------------------------------------------------------------
class SeriesKind(str, Enum):
    VARIANCE = "variance"
    COVARIANCE = "covariance"
    RETURN = "return"


@dataclass(frozen=True)
class RealizedSeries:
    """Daily values indexed by a strictly increasing DatetimeIndex."""

    label: str
    kind: SeriesKind
    values: pd.Series

    def __post_init__(self) -> None:
        index = pd.DatetimeIndex(self.values.index)
        if not index.is_monotonic_increasing or index.has_duplicates:
            raise ValueError(f"{self.label}: dates must be strictly increasing")
        if self.kind is SeriesKind.VARIANCE and (self.values.dropna() < 0).any():
            raise ValueError(f"{self.label}: realized variance cannot be negative")

    @classmethod
    def from_values(
        cls, label: str, kind: SeriesKind, dates, values
    ) -> RealizedSeries:
        index = pd.DatetimeIndex(pd.to_datetime(list(dates)), name="date")
        return cls(label, kind, pd.Series(np.asarray(values, dtype=float), index=index, name=label))

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.DatetimeIndex(self.values.index)

    def __len__(self) -> int:
        return len(self.values)

    def to_numpy(self) -> np.ndarray:
        return self.values.to_numpy(dtype=float)

    def between(self, start: date | None = None, end: date | None = None) -> RealizedSeries:
        """Inclusive date slice."""
        mask = np.ones(len(self.values), dtype=bool)
        if start is not None:
            mask &= self.dates >= pd.Timestamp(start)
        if end is not None:
            mask &= self.dates <= pd.Timestamp(end)
        return RealizedSeries(self.label, self.kind, self.values[mask])

    def reindex(self, dates: pd.DatetimeIndex) -> RealizedSeries:
        return RealizedSeries(self.label, self.kind, self.values.reindex(dates))

    def to_frame(self) -> pd.DataFrame:
        """CSV layout: date, value."""
        return pd.DataFrame(
            {"date": self.dates.strftime("%Y-%m-%d"), "value": self.to_numpy()}
        )
