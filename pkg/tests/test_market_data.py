"""Tests for bar ingestion and realized measures."""

import logging
import math
from datetime import date

import numpy as np
import pytest

from robusthedging.analytics.market_data import (
    align_pair,
    daily_close_returns,
    interval_log_returns,
    pair_correlation,
    parse_bar_file,
    realized_covariance,
    realized_covariance_series,
    realized_variance,
    realized_variance_series,
)
from robusthedging.errors import DataError, DegenerateCorrelationError, MalformedRowError
from robusthedging.models.series import RealizedSeries, SeriesKind, TradingWindow

HEADER = "date,time,open,high,low,close,volume\n"


def _make_file(rows):
    """rows: (date, time, close) tuples -> CSV bytes."""
    body = "".join(f"{d},{t},{c},{c},{c},{c},100\n" for d, t, c in rows)
    return (HEADER + body).encode()


def _make_day(day, closes, start_minute=605):
    return [(day, f"{(start_minute + 5 * i) // 60:02d}:{(start_minute + 5 * i) % 60:02d}", c) for i, c in enumerate(closes)]


def _returns(symbol, values, start="2021-01-04"):
    dates = np.busday_offset(np.datetime64(start), np.arange(len(values)), roll="forward")
    return RealizedSeries.from_values(symbol, SeriesKind.RETURN, dates, values)


# ---------------------------------------------------------------------------
# Trading window and parsing
# ---------------------------------------------------------------------------

def test_default_window_has_66_intervals():
    assert TradingWindow().M == 66


def test_window_rejects_reversed_times():
    with pytest.raises(ValueError, match="end_time"):
        TradingWindow(start_time="15:30", end_time="10:00")


def test_bars_outside_window_discarded():
    series = parse_bar_file(_make_file([("2021-01-04", "09:35", 100), ("2021-01-04", "16:00", 101)]), "X")
    assert series.days == (date(2021, 1, 4),)
    assert series.bars.empty


def test_bar_snaps_to_interval_ending_at_its_timestamp():
    series = parse_bar_file(_make_file([("2021-01-04", "10:05", 100)]), "X")
    assert series.bars["interval"].tolist() == [0]
    assert series.bars["close"].tolist() == [100.0]


def test_window_edges():
    rows = [("2021-01-04", "10:00", 99), ("2021-01-04", "10:03", 100), ("2021-01-04", "15:30", 101)]
    series = parse_bar_file(_make_file(rows), "X")
    assert series.bars["interval"].tolist() == [0, 65]


def test_duplicate_interval_keeps_last_row():
    series = parse_bar_file(_make_file([("2021-01-04", "10:05", 100), ("2021-01-04", "10:05", 102)]), "X")
    assert series.bars["close"].tolist() == [102.0]


def test_us_dates_detected():
    series = parse_bar_file(_make_file([("01/04/2021", "10:05", 100), ("01/05/2021", "10:05", 101)]), "X")
    assert series.days == (date(2021, 1, 4), date(2021, 1, 5))


def test_mixed_date_formats_rejected_with_line_number():
    rows = [("2021-01-04", "10:05", 100), ("2021-01-04", "10:10", 101), ("01/05/2021", "10:05", 102)]
    with pytest.raises(MalformedRowError, match="not uniform") as info:
        parse_bar_file(_make_file(rows), "X")
    assert info.value.line == 4

    rows = [("01/04/2021", "10:05", 100), ("2021-01-05", "10:05", 101)]
    with pytest.raises(MalformedRowError, match="line 3: date format is not uniform"):
        parse_bar_file(_make_file(rows), "X")


def test_malformed_row_reports_line_number():
    rows = [("2021-01-04", "10:05", 100), ("2021-01-04", "10:10", 101), ("2021-01-04", "10:15", "abc")]
    with pytest.raises(MalformedRowError, match="line 4") as info:
        parse_bar_file(_make_file(rows), "X")
    assert info.value.line == 4
    assert info.value.exit_code == 2


def test_missing_columns_rejected():
    with pytest.raises(MalformedRowError, match="missing columns"):
        parse_bar_file(b"date,time,close\n2021-01-04,10:05,100\n", "X")


def test_non_positive_close_rejected():
    with pytest.raises(DataError, match="non-positive"):
        parse_bar_file(_make_file([("2021-01-04", "10:05", 100), ("2021-01-04", "10:10", 0)]), "X")


def test_out_of_order_dates_rejected():
    with pytest.raises(DataError, match="out of order"):
        parse_bar_file(_make_file([("2021-01-05", "10:05", 100), ("2021-01-04", "10:10", 100)]), "X")


# ---------------------------------------------------------------------------
# Interval returns and realized measures
# ---------------------------------------------------------------------------

def test_constant_prices_give_zero_returns():
    series = parse_bar_file(_make_file(_make_day("2021-01-04", [100, 100, 100])), "X")
    assert interval_log_returns(series, date(2021, 1, 4)) == [(1, 0.0), (2, 0.0)]


def test_single_log_return():
    series = parse_bar_file(_make_file(_make_day("2021-01-04", [100, 110])), "X")
    [(i, r)] = interval_log_returns(series, date(2021, 1, 4))
    assert i == 1
    assert r == pytest.approx(math.log(1.1))


def test_non_adjacent_intervals_give_no_return():
    rows = [("2021-01-04", "10:05", 100), ("2021-01-04", "10:15", 101)]
    series = parse_bar_file(_make_file(rows), "X")
    assert interval_log_returns(series, date(2021, 1, 4)) == []


def test_unknown_day_rejected():
    series = parse_bar_file(_make_file(_make_day("2021-01-04", [100, 110])), "X")
    with pytest.raises(DataError, match="no trading day"):
        interval_log_returns(series, date(2021, 1, 5))


def test_realized_variance_arithmetic():
    assert realized_variance([0.0, 0.0, 0.0], 66) == 0.0
    assert realized_variance([math.sqrt(0.5 / 33)] * 33, 66) == pytest.approx(1.0)
    assert realized_variance([0.01] * 66, 66) == pytest.approx(6.6e-3)


def test_empty_day_is_missing_marker():
    assert math.isnan(realized_variance([], 66))


def test_realized_covariance_examples():
    rx = [(1, 0.01), (2, -0.02), (3, 0.005)]
    assert realized_covariance(rx, rx, 66) == realized_variance([r for _, r in rx], 66)
    assert realized_covariance(rx, [(i, -r) for i, r in rx], 66) == pytest.approx(-realized_variance([0.01, -0.02, 0.005], 66))
    assert realized_covariance([(0, 0.03), (1, 0.01)], [(1, 0.02), (2, 0.04)], 66) == pytest.approx(0.0132)


def test_rv_scales_quadratically():
    r = np.array([0.01, -0.004, 0.02])
    assert realized_variance(3 * r, 66) == pytest.approx(9 * realized_variance(r, 66))


def test_series_rv_matches_per_day_rv():
    rng = np.random.default_rng(3)
    rows = []
    for day in ("2021-01-04", "2021-01-05", "2021-01-06"):
        rows += _make_day(day, list(100 * np.exp(np.cumsum(rng.normal(0, 0.001, 66)))))
    series = parse_bar_file(_make_file(rows), "X")
    rv = realized_variance_series(series)
    for day, value in zip(series.days, rv.to_numpy()):
        per_day = realized_variance([r for _, r in interval_log_returns(series, day)], 66)
        assert value == pytest.approx(per_day, rel=1e-12)


def test_full_day_uses_m_over_m_minus_one_correction():
    closes = [100 * math.exp(0.001 * i) for i in range(66)]
    series = parse_bar_file(_make_file(_make_day("2021-01-04", closes)), "X")
    rv = realized_variance_series(series).to_numpy()[0]
    assert rv == pytest.approx(66 / 65 * 65 * 1e-6)


def test_rcv_of_symbol_with_itself_equals_rv():
    rng = np.random.default_rng(4)
    rows = _make_day("2021-01-04", list(100 * np.exp(np.cumsum(rng.normal(0, 0.001, 40)))))
    series = parse_bar_file(_make_file(rows), "X")
    rv = realized_variance_series(series)
    rcv = realized_covariance_series(series, series)
    assert rcv.to_numpy() == pytest.approx(rv.to_numpy(), rel=1e-12)
    assert rcv.label == "X_X"


def test_day_without_returns_dropped_with_warning(caplog):
    rows = _make_day("2021-01-04", [100, 101, 102]) + _make_day("2021-01-05", [103])
    series = parse_bar_file(_make_file(rows), "X")
    with caplog.at_level(logging.WARNING):
        rv = realized_variance_series(series)
    assert len(rv) == 1
    assert "without returns" in caplog.text


def test_forward_fill_policy_carries_last_rv():
    rows = _make_day("2021-01-04", [100, 101, 102]) + _make_day("2021-01-05", [103])
    series = parse_bar_file(_make_file(rows), "X")
    rv = realized_variance_series(series, missing_policy="ffill")
    assert len(rv) == 2
    assert rv.to_numpy()[1] == rv.to_numpy()[0]


def test_align_pair_shares_dates():
    s = RealizedSeries.from_values("S", SeriesKind.VARIANCE, ["2021-01-04", "2021-01-05", "2021-01-06"], [1, 2, 3])
    f = RealizedSeries.from_values("F", SeriesKind.VARIANCE, ["2021-01-05", "2021-01-06"], [1, 2])
    c = RealizedSeries.from_values("S_F", SeriesKind.COVARIANCE, ["2021-01-04", "2021-01-05"], [0.1, 0.2])
    a, b, cc = align_pair(s, f, c)
    assert a.dates.equals(b.dates) and b.dates.equals(cc.dates)
    assert len(a) == 1


# ---------------------------------------------------------------------------
# Daily returns and correlation
# ---------------------------------------------------------------------------

def test_daily_close_returns_telescoping():
    rows = _make_day("2021-01-04", [99, 100]) + _make_day("2021-01-05", [105]) + _make_day("2021-01-06", [100])
    returns = daily_close_returns(parse_bar_file(_make_file(rows), "X"))
    assert returns.to_numpy() == pytest.approx([math.log(1.05), math.log(100 / 105)])
    assert returns.to_numpy().sum() == pytest.approx(0.0, abs=1e-15)


def test_single_day_gives_empty_returns():
    returns = daily_close_returns(parse_bar_file(_make_file(_make_day("2021-01-04", [100, 101])), "X"))
    assert len(returns) == 0


def test_pair_correlation_examples():
    r_s = _returns("S", [1.0, 2.0, 3.0])
    assert pair_correlation(r_s, _returns("F", [1.0, 2.0, 3.0])) == pytest.approx(1.0)
    assert pair_correlation(r_s, _returns("F", [-1.0, -2.0, -3.0])) == pytest.approx(-1.0)
    assert pair_correlation(r_s, _returns("F", [1.0, 3.0, 2.0])) == pytest.approx(0.5)


def test_constant_series_correlation_is_degenerate():
    with pytest.raises(DegenerateCorrelationError):
        pair_correlation(_returns("S", [1.0, 1.0, 1.0]), _returns("F", [1.0, 2.0, 3.0]))
