"""
JSON schemas for every tabular output.

A table is validated through its frame descriptor (column list, per-column
kind, row count; see services.validation.describe_frame) rather than row by
row, so each schema pins the exact header and the kind of each column.
"""

from __future__ import annotations

NUMBER = ("number", "integer", "empty")
INTEGER = ("integer", "empty")
STRING = ("string", "empty")
BOOLEAN = ("boolean", "empty")


def table_schema(title: str, columns: dict[str, tuple[str, ...]]) -> dict:
    names = list(columns)
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": title,
        "type": "object",
        "required": ["columns", "kinds", "rows"],
        "properties": {
            "columns": {"const": names},
            "kinds": {
                "type": "object",
                "required": names,
                "properties": {name: {"enum": list(kinds)} for name, kinds in columns.items()},
                "additionalProperties": False,
            },
            "rows": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    }


_METRIC_COLUMNS = {
    "pnl": NUMBER,
    "sharpe": NUMBER,
    "omega": NUMBER,
    "max_drawdown": NUMBER,
    "var95": NUMBER,
    "es95": NUMBER,
}

OUTPUT_SCHEMAS: dict[str, dict] = {
    "bars": table_schema(
        "Intraday bars",
        {
            "date": STRING,
            "time": STRING,
            "open": NUMBER,
            "high": NUMBER,
            "low": NUMBER,
            "close": NUMBER,
            "volume": INTEGER,
        },
    ),
    "realized": table_schema("Realized series", {"date": STRING, "value": NUMBER}),
    "forecast": table_schema(
        "Forecast paths", {"origin_date": STRING, "j": INTEGER, "point": NUMBER, "theta": NUMBER}
    ),
    "hedge": table_schema(
        "Hedge path",
        {"date": STRING, "h_standard": NUMBER, "h_robust": NUMBER, "theta": NUMBER, "tau": INTEGER},
    ),
    "adf": table_schema(
        "ADF screen",
        {
            "series": STRING,
            "kind": STRING,
            "statistic": NUMBER,
            "critical_value": NUMBER,
            "reject_unit_root": BOOLEAN,
            "lag_order": INTEGER,
            "nobs": INTEGER,
        },
    ),
    "rmse": table_schema(
        "Forecast RMSE",
        {"series": STRING, "model": STRING, "tau": INTEGER, "rmse": NUMBER, "ratio": NUMBER},
    ),
    "theta_comparison": table_schema(
        "Closed-form vs empirical theta",
        {"series": STRING, "tau": INTEGER, "theta_closed_form": NUMBER, "theta_empirical": NUMBER},
    ),
    "dispersion": table_schema(
        "Hedge ratio dispersion",
        {
            "pair": STRING,
            "model": STRING,
            "tau": INTEGER,
            "mean_standard": NUMBER,
            "std_standard": NUMBER,
            "mean_robust": NUMBER,
            "std_robust": NUMBER,
        },
    ),
    "report": table_schema(
        "Backtest report",
        {
            "pair": STRING,
            "hedged": STRING,
            "hedging": STRING,
            "model": STRING,
            "tau": INTEGER,
            "bp": NUMBER,
            "method": STRING,
            "HE": NUMBER,
            "HE_C": NUMBER,
            "HE_R": NUMBER,
            **_METRIC_COLUMNS,
            "delta_threshold": NUMBER,
            "total_costs": NUMBER,
            "omega_capped": BOOLEAN,
            "correlation": NUMBER,
        },
    ),
    "differences": table_schema(
        "Robust minus standard",
        {"pair": STRING, "model": STRING, "tau": INTEGER, "bp": NUMBER, **_METRIC_COLUMNS},
    ),
    "scatter": table_schema(
        "Scatter data",
        {
            "pair": STRING,
            "model": STRING,
            "tau": INTEGER,
            "bp": NUMBER,
            "metric": STRING,
            "x": NUMBER,
            "y": NUMBER,
            "color_key": STRING,
            "color": NUMBER,
        },
    ),
    "bootstrap": table_schema(
        "Bootstrap differences",
        {
            "measure": STRING,
            "pair": STRING,
            "mean_difference": NUMBER,
            "p_value": NUMBER,
            "mean_difference_temporal": NUMBER,
            "p_value_temporal": NUMBER,
            "replications": INTEGER,
            "block_length": INTEGER,
        },
    ),
    "irf": table_schema(
        "Impulse response of the hedge ratio",
        {"pair": STRING, "model": STRING, "h": INTEGER, "delta": NUMBER},
    ),
}
