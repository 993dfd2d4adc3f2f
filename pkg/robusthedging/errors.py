"""
Exception hierarchy shared by every stage.

Each error carries an exit code for the CLI and a ``context`` dict that
stages fill in with the offending stage / pair / date so failures point at
the exact cell that broke.
"""

from __future__ import annotations

from typing import Any


class HedgeError(ValueError):
    """Base error. Subclasses ValueError so callers can catch it generically."""

    exit_code: int = 3

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context: dict[str, Any] = {k: v for k, v in context.items() if v is not None}

    def with_context(self, **context: Any) -> HedgeError:
        for key, value in context.items():
            if value is not None:
                self.context.setdefault(key, value)
        return self

    def __str__(self) -> str:
        base = super().__str__()
        if not self.context:
            return base
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{base} [{ctx}]"


# ---------------------------------------------------------------------------
# Configuration (exit code 1)
# ---------------------------------------------------------------------------

class ConfigError(HedgeError):
    exit_code = 1


class InvalidSpecError(ConfigError):
    """Synthetic dataset spec rejected (bad shape, non-stationary, not PD)."""


# ---------------------------------------------------------------------------
# Data (exit code 2)
# ---------------------------------------------------------------------------

class DataError(HedgeError):
    exit_code = 2


class MalformedRowError(DataError):
    def __init__(self, message: str, line: int, **context: Any):
        super().__init__(f"line {line}: {message}", line=line, **context)
        self.line = line


class MisalignedDatesError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class EmptyConditionError(DataError):
    """Too few observations satisfy a tail condition r_S < delta."""


# ---------------------------------------------------------------------------
# Numerics (exit code 3)
# ---------------------------------------------------------------------------

class NumericError(HedgeError):
    exit_code = 3


class DegenerateFitError(NumericError):
    pass


class DegenerateCorrelationError(NumericError):
    pass


class NonStationaryError(NumericError):
    pass


class ZeroDenominatorError(NumericError):
    pass


class StageError(HedgeError):
    """Raised by run_pipeline when a DAG stage fails; wraps the original error."""

    def __init__(self, stage: str, cause: BaseException):
        context = dict(getattr(cause, "context", {}) or {})
        context.setdefault("stage", stage)
        detail = cause.args[0] if isinstance(cause, HedgeError) and cause.args else str(cause)
        super().__init__(f"stage '{stage}' failed: {detail}", **context)
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
