"""
JSON Schema validation of output tables.

Demonstrates:
- Schema-driven validation of every table before it is written
- Collecting all errors rather than failing on the first one
"""

from typing import Any

import jsonschema
import pandas as pd


def validate_against_schema(data: dict[str, Any], schema: dict[str, Any]) -> list[str]:
    """
    Validate a dict against a JSON schema.
    Returns a list of error messages (empty list = valid).
    """
    validator = jsonschema.Draft7Validator(schema)
    return [error.message for error in validator.iter_errors(data)]


def _kind(series: pd.Series) -> str:
    if len(series) == 0:
        return "empty"
    if pd.api.types.is_bool_dtype(series):
        return "boolean"
    if pd.api.types.is_integer_dtype(series):
        return "integer"
    if pd.api.types.is_float_dtype(series):
        return "number"
    return "string"


def describe_frame(frame: pd.DataFrame) -> dict[str, Any]:
    """Column list, per-column kind and row count of a table."""
    return {
        "columns": [str(c) for c in frame.columns],
        "kinds": {str(c): _kind(frame[c]) for c in frame.columns},
        "rows": int(len(frame)),
    }


def validate_frame(frame: pd.DataFrame, schema: dict[str, Any]) -> list[str]:
    return validate_against_schema(describe_frame(frame), schema)
