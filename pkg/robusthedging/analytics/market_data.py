"""
Intraday bars -> daily realized measures.

Bars are parsed into a fixed interval grid (TradingWindow). Interval log
returns are only formed between adjacent intervals of the same day, and the
realized estimators rescale by M / (number of available returns) so days with
gaps stay comparable.
"""

from __future__ import annotations

import io
import logging
import re
from datetime import date
from typing import BinaryIO, Iterable, Sequence

import numpy as np
import pandas as pd

from robusthedging.errors import (
    DataError,
    DegenerateCorrelationError,
    InsufficientDataError,
    MalformedRowError,
)
from robusthedging.models.series import (
    IntradayBarSeries,
    RealizedSeries,
    SeriesKind,
    TradingWindow,
)

logger = logging.getLogger(__name__)

BAR_COLUMNS = ["date", "time", "open", "high", "low", "close", "volume"]
MISSING_DAY_POLICIES = ("drop", "ffill")

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_US_DATE = re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$")
_PARSER_LINE = re.compile(r"line (\d+)")


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def _detect_date_format(first_value: str) -> str | None:
    if _ISO_DATE.match(first_value):
        return "%Y-%m-%d"
    if _US_DATE.match(first_value):
        return "%m/%d/%Y"
    return None


def _first_bad_line(mask: np.ndarray) -> int:
    # +2: one for the header row, one for 1-based numbering
    return int(np.flatnonzero(mask)[0]) + 2


def parse_bar_file(
    stream: BinaryIO | bytes,
    symbol: str,
    window: TradingWindow | None = None,
) -> IntradayBarSeries:
    """
    Parse a date,time,open,high,low,close,volume CSV into grid-snapped bars.

    Bars outside the window are discarded, each remaining bar is placed on the
    interval ending at its timestamp, and duplicate intervals keep the last row.
    """
    window = window or TradingWindow()
    raw = stream if isinstance(stream, (bytes, bytearray)) else stream.read()

    try:
        frame = pd.read_csv(io.BytesIO(raw), dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise MalformedRowError("missing header row", line=1, symbol=symbol)
    except pd.errors.ParserError as exc:
        match = _PARSER_LINE.search(str(exc))
        line = int(match.group(1)) if match else 0
        raise MalformedRowError("wrong number of fields", line=line, symbol=symbol) from exc

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in BAR_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedRowError(f"missing columns {missing}", line=1, symbol=symbol)

    if frame.empty:
        empty = pd.DataFrame(
            {"date": pd.Series(dtype="datetime64[ns]"), "interval": pd.Series(dtype=np.int64),
             "close": pd.Series(dtype=float)}
        )
        return IntradayBarSeries(symbol=symbol, days=(), bars=empty)

    date_format = _detect_date_format(frame["date"].iloc[0].strip())
    if date_format is None:
        raise MalformedRowError(f"unrecognised date '{frame['date'].iloc[0]}'", line=2, symbol=symbol)

    raw_dates = frame["date"].str.strip()
    other_format = _US_DATE if date_format == "%Y-%m-%d" else _ISO_DATE
    mixed = raw_dates.str.match(other_format.pattern).to_numpy(dtype=bool)
    if mixed.any():
        raise MalformedRowError(
            "date format is not uniform across the file", line=_first_bad_line(mixed), symbol=symbol
        )

    dates = pd.to_datetime(raw_dates, format=date_format, errors="coerce")
    times = pd.to_datetime(frame["time"].str.strip(), format="%H:%M", errors="coerce")
    close = pd.to_numeric(frame["close"], errors="coerce")

    bad = (dates.isna() | times.isna() | close.isna()).to_numpy()
    if bad.any():
        raise MalformedRowError("unparseable date, time or close", line=_first_bad_line(bad), symbol=symbol)

    non_positive = (close <= 0).to_numpy()
    if non_positive.any():
        line = _first_bad_line(non_positive)
        raise DataError(f"line {line}: non-positive close price", line=line, symbol=symbol)

    backwards = np.zeros(len(dates), dtype=bool)
    backwards[1:] = dates.to_numpy()[1:] < dates.to_numpy()[:-1]
    if backwards.any():
        line = _first_bad_line(backwards)
        raise DataError(f"line {line}: dates out of order", line=line, symbol=symbol)

    minutes = (times.dt.hour * 60 + times.dt.minute).to_numpy()
    bars = pd.DataFrame(
        {"date": dates.to_numpy(), "interval": window.interval_of(minutes), "close": close.to_numpy(dtype=float)}
    )
    bars = bars[bars["interval"] >= 0]
    bars = (
        bars.drop_duplicates(subset=["date", "interval"], keep="last")
        .sort_values(["date", "interval"], kind="stable")
        .reset_index(drop=True)
    )

    days = tuple(dict.fromkeys(dates.dt.date))
    logger.info("Parsed %s: %d days, %d in-window bars", symbol, len(days), len(bars))
    return IntradayBarSeries(symbol=symbol, days=days, bars=bars)


# ---------------------------------------------------------------------------
# Per-day estimators
# ---------------------------------------------------------------------------

def interval_log_returns(series: IntradayBarSeries, day: date) -> list[tuple[int, float]]:
    """r(i) = ln(p(i) / p(i-1)) for every i whose predecessor interval also has a bar."""
    if day not in series.days:
        raise DataError(f"{series.symbol} has no trading day {day}", symbol=series.symbol, date=day)
    bars = series.bars_on(pd.Timestamp(day))
    idx = bars["interval"].to_numpy()
    log_close = np.log(bars["close"].to_numpy(dtype=float))
    adjacent = np.diff(idx) == 1
    returns = np.diff(log_close)[adjacent]
    return [(int(i), float(r)) for i, r in zip(idx[1:][adjacent], returns)]


def realized_variance(returns: Sequence[float], M: int) -> float:
    """(M / M_x) * sum r^2. An empty day returns NaN (the missing-day marker)."""
    if M < 1:
        raise ValueError("M must be at least 1")
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        return float("nan")
    return M / r.size * float(np.sum(r * r))


def realized_covariance(
    returns_x: Iterable[tuple[int, float]],
    returns_y: Iterable[tuple[int, float]],
    M: int,
) -> float:
    """(M / M_xy) * sum r_x r_y over intervals present in both lists; NaN if none."""
    if M < 1:
        raise ValueError("M must be at least 1")
    ry = dict(returns_y)
    joined = [(rx, ry[i]) for i, rx in returns_x if i in ry]
    if not joined:
        return float("nan")
    x, y = np.asarray(joined, dtype=float).T
    return M / len(joined) * float(np.sum(x * y))


# ---------------------------------------------------------------------------
# Whole-series estimators (vectorized over days)
# ---------------------------------------------------------------------------

def _returns_frame(series: IntradayBarSeries) -> pd.DataFrame:
    bars = series.bars
    d = bars["date"].to_numpy()
    i = bars["interval"].to_numpy()
    log_close = np.log(bars["close"].to_numpy(dtype=float))
    keep = (d[1:] == d[:-1]) & (np.diff(i) == 1)
    return pd.DataFrame({"date": d[1:][keep], "interval": i[1:][keep], "r": np.diff(log_close)[keep]})


def apply_missing_policy(values: pd.Series, policy: str, label: str) -> pd.Series:
    """Drop NaN days, or carry the last realized value forward."""
    if policy not in MISSING_DAY_POLICIES:
        raise ValueError(f"unknown missing-day policy '{policy}'")
    n_missing = int(values.isna().sum())
    if n_missing:
        logger.warning("%s: %d day(s) without returns (%s)", label, n_missing, policy)
    if policy == "ffill":
        values = values.ffill()
    return values.dropna()


def _scaled_sum(grouped: pd.DataFrame, column: str, M: int, index: pd.DatetimeIndex) -> pd.Series:
    stats = grouped.groupby("date")[column].agg(["sum", "count"])
    rv = M / stats["count"] * stats["sum"]
    return rv.reindex(index)


def realized_variance_series(
    series: IntradayBarSeries,
    window: TradingWindow | None = None,
    missing_policy: str = "drop",
) -> RealizedSeries:
    window = window or TradingWindow()
    frame = _returns_frame(series)
    frame["r2"] = frame["r"] * frame["r"]
    index = pd.DatetimeIndex([pd.Timestamp(d) for d in series.days], name="date")
    values = apply_missing_policy(_scaled_sum(frame, "r2", window.M, index), missing_policy, series.symbol)
    return RealizedSeries(series.symbol, SeriesKind.VARIANCE, values.rename(series.symbol))


def realized_covariance_series(
    series_x: IntradayBarSeries,
    series_y: IntradayBarSeries,
    window: TradingWindow | None = None,
    missing_policy: str = "drop",
) -> RealizedSeries:
    window = window or TradingWindow()
    label = f"{series_x.symbol}_{series_y.symbol}"
    joined = _returns_frame(series_x).merge(
        _returns_frame(series_y), on=["date", "interval"], suffixes=("_x", "_y")
    )
    joined["rxy"] = joined["r_x"] * joined["r_y"]
    common = sorted(set(series_x.days) & set(series_y.days))
    index = pd.DatetimeIndex([pd.Timestamp(d) for d in common], name="date")
    values = apply_missing_policy(_scaled_sum(joined, "rxy", window.M, index), missing_policy, label)
    return RealizedSeries(label, SeriesKind.COVARIANCE, values.rename(label))


def daily_close_returns(series: IntradayBarSeries) -> RealizedSeries:
    """R_t = ln(last_close(t) / last_close(t-1)) over days that have in-window bars."""
    last = series.bars.groupby("date")["close"].last()
    skipped = len(series.days) - len(last)
    if skipped:
        logger.warning("%s: %d day(s) with no in-window bars skipped", series.symbol, skipped)
    log_close = np.log(last.to_numpy(dtype=float))
    dates = pd.DatetimeIndex(last.index[1:], name="date")
    return RealizedSeries(
        series.symbol,
        SeriesKind.RETURN,
        pd.Series(np.diff(log_close), index=dates, name=series.symbol),
    )


def align_pair(
    rv_s: RealizedSeries, rv_f: RealizedSeries, rcv: RealizedSeries
) -> tuple[RealizedSeries, RealizedSeries, RealizedSeries]:
    """Restrict RV_S, RV_F and RCV_SF to their common dates."""
    common = rv_s.dates.intersection(rv_f.dates).intersection(rcv.dates)
    return rv_s.reindex(common), rv_f.reindex(common), rcv.reindex(common)


def pair_correlation(
    r_s: RealizedSeries,
    r_f: RealizedSeries,
    start: date | None = None,
    end: date | None = None,
) -> float:
    """Pearson correlation of date-aligned returns inside [start, end]."""
    joined = pd.concat(
        [r_s.between(start, end).values, r_f.between(start, end).values], axis=1, join="inner"
    ).dropna()
    if len(joined) < 3:
        raise InsufficientDataError(
            f"need 3 overlapping returns, got {len(joined)}", pair=f"{r_s.label}/{r_f.label}"
        )
    x, y = joined.iloc[:, 0].to_numpy(), joined.iloc[:, 1].to_numpy()
    if np.std(x) == 0 or np.std(y) == 0:
        raise DegenerateCorrelationError(
            "constant return series", pair=f"{r_s.label}/{r_f.label}"
        )
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))
