"""Tests for scatter figure data and pair-type coding."""

import numpy as np
import pandas as pd
import pytest

from robusthedging.analytics.reporting import emit_scatter_data, pair_type
from robusthedging.errors import ConfigError, DataError

ASSET_CLASSES = {"IVV": "equity", "QQQM": "equity", "GOVT": "bond", "BNO": "commodity"}


def _make_report(pairs=(("IVV", "QQQM"), ("GOVT", "IVV")), robust_shift=0.0, methods=("standard", "robust")):
    rows = []
    for hedged, hedging in pairs:
        for method in methods:
            shift = robust_shift if method == "robust" else 0.0
            rows.append(
                {
                    "pair": f"{hedged}_{hedging}", "hedged": hedged, "hedging": hedging,
                    "model": "ar1", "tau": 1, "bp": 0.0, "method": method,
                    "HE": 0.4 + shift, "HE_C": 0.3 + shift, "HE_R": 0.5 - shift,
                }
            )
    return pd.DataFrame(rows)


def test_pair_type_codes():
    assert pair_type("equity", "equity") == 1
    assert pair_type("bond", "bond") == 2
    assert pair_type("commodity", "commodity") == 3
    assert pair_type("Equity", "Bond") == 4
    assert pair_type("commodity", "bond") == 9


def test_mixed_pair_codes_are_ordered():
    codes = {pair_type(a, b) for a in ("equity", "bond", "commodity") for b in ("equity", "bond", "commodity")}
    assert codes == set(range(1, 10))
    assert pair_type("equity", "bond") != pair_type("bond", "equity")


def test_unknown_asset_class_rejected():
    with pytest.raises(ConfigError, match="unknown asset classes"):
        pair_type("equity", "crypto")


def test_identical_reports_lie_on_bisector():
    frame = emit_scatter_data(_make_report(), ["HE", "HE_C"], "pair_correlation", correlations={"IVV_QQQM": 0.9})
    assert len(frame) == 4
    np.testing.assert_array_equal(frame["x"], frame["y"])
    assert list(frame.columns) == ["pair", "model", "tau", "bp", "metric", "x", "y", "color_key", "color"]


def test_correlation_colours():
    frame = emit_scatter_data(_make_report(), ["HE"], "pair_correlation", correlations={"IVV_QQQM": 0.9})
    colours = dict(zip(frame["pair"], frame["color"]))
    assert colours["IVV_QQQM"] == 0.9
    assert np.isnan(colours["GOVT_IVV"])


def test_pair_type_colours():
    frame = emit_scatter_data(_make_report(robust_shift=0.1), ["HE_R"], "pair_type", asset_classes=ASSET_CLASSES)
    assert dict(zip(frame["pair"], frame["color"])) == {"IVV_QQQM": 1.0, "GOVT_IVV": 6.0}
    np.testing.assert_allclose(frame["y"] - frame["x"], -0.1)


def test_missing_asset_class_rejected():
    with pytest.raises(ConfigError, match="no asset class"):
        emit_scatter_data(_make_report(), ["HE"], "pair_type", asset_classes={"IVV": "equity"})


def test_missing_counterpart_rejected():
    with pytest.raises(DataError, match="counterpart"):
        emit_scatter_data(_make_report(methods=("standard",)), ["HE"], "pair_correlation")


def test_unknown_colour_key_rejected():
    with pytest.raises(ConfigError, match="color key"):
        emit_scatter_data(_make_report(), ["HE"], "volume")


def test_empty_report_gives_empty_frame():
    frame = emit_scatter_data(pd.DataFrame(), ["HE"], "pair_correlation")
    assert frame.empty
    assert "color" in frame.columns
