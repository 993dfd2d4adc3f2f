"""Figure data: standard-vs-robust scatter points coloured by pair attributes."""

from __future__ import annotations

import logging
from typing import Mapping, Sequence

import pandas as pd

from robusthedging.analytics.backtest import HEDGE_METHODS, REPORT_KEYS
from robusthedging.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

ASSET_CLASSES = ("equity", "bond", "commodity")

# same-class pairs 1..3, then ordered mixed pairs 4..9
_PAIR_TYPE = {
    ("equity", "equity"): 1,
    ("bond", "bond"): 2,
    ("commodity", "commodity"): 3,
    ("equity", "bond"): 4,
    ("equity", "commodity"): 5,
    ("bond", "equity"): 6,
    ("bond", "commodity"): 7,
    ("commodity", "equity"): 8,
    ("commodity", "bond"): 9,
}

COLOR_KEYS = ("pair_correlation", "pair_type")


def pair_type(class_hedged: str, class_hedging: str) -> int:
    try:
        return _PAIR_TYPE[(class_hedged.lower(), class_hedging.lower())]
    except KeyError:
        raise ConfigError(
            f"unknown asset classes ({class_hedged}, {class_hedging}); expected {ASSET_CLASSES}"
        ) from None


def emit_scatter_data(
    report: pd.DataFrame,
    metrics: Sequence[str],
    color_key: str,
    correlations: Mapping[str, float] | None = None,
    asset_classes: Mapping[str, str] | None = None,
) -> pd.DataFrame:
    """
    One point per report cell and metric: x = standard value, y = robust value.

    ``report`` needs the columns pair, hedged, hedging, method and the
    REPORT_KEYS; colours come from ``correlations`` (keyed by pair) or from
    the asset class of each leg.
    """
    if color_key not in COLOR_KEYS:
        raise ConfigError(f"unknown color key '{color_key}'")
    columns = ["pair", "model", "tau", "bp", "metric", "x", "y", "color_key", "color"]
    if report.empty:
        return pd.DataFrame(columns=columns)

    standard, robust = (
        report[report["method"] == m].set_index(REPORT_KEYS) for m in HEDGE_METHODS
    )
    missing = standard.index.symmetric_difference(robust.index)
    if len(missing):
        raise DataError("scatter point has no counterpart report", pair=missing[0][0])
    robust = robust.loc[standard.index]

    if color_key == "pair_correlation":
        correlations = correlations or {}
        colors = [correlations.get(pair, float("nan")) for pair in standard.index.get_level_values("pair")]
    else:
        asset_classes = asset_classes or {}
        colors = []
        for hedged, hedging in zip(standard["hedged"], standard["hedging"]):
            if hedged not in asset_classes or hedging not in asset_classes:
                raise ConfigError(f"no asset class for pair {hedged}/{hedging}")
            colors.append(pair_type(asset_classes[hedged], asset_classes[hedging]))

    frames = []
    keys = standard.index.to_frame(index=False)
    for metric in metrics:
        frame = keys.copy()
        frame["metric"] = metric
        frame["x"] = standard[metric].to_numpy(dtype=float)
        frame["y"] = robust[metric].to_numpy(dtype=float)
        frame["color_key"] = color_key
        frame["color"] = pd.Series(colors, dtype=float).to_numpy()
        frames.append(frame)
    scatter = pd.concat(frames, ignore_index=True)[columns]
    logger.info("Scatter data: %d points over %d metric(s)", len(scatter), len(metrics))
    return scatter
