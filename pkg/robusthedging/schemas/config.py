"""
Pydantic schemas for run configuration, synthetic data and the run manifest.

Demonstrates:
- Nested pydantic models as the contract for a YAML experiment file
- Cross-field validation (split dates, horizons, referenced symbols)
- A key-order independent config hash for reproducibility
"""

from __future__ import annotations

import hashlib
import json
from datetime import date
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from robusthedging.models.forecast import ThetaMode, Transform
from robusthedging.models.series import TradingWindow

DEFAULT_ASSET_CLASSES: dict[str, str] = {
    "IVV": "equity",
    "ICLN": "equity",
    "QQQM": "equity",
    "ASHR": "equity",
    "EWH": "equity",
    "IEV": "equity",
    "CORP": "bond",
    "IGOV": "bond",
    "GOVT": "bond",
    "BNO": "commodity",
    "UNG": "commodity",
    "AAAU": "commodity",
    "GSG": "commodity",
}

METRIC_NAMES = ("pnl", "sharpe", "omega", "max_drawdown", "var95", "es95")
EFFECTIVENESS_NAMES = ("HE", "HE_C", "HE_R")


# ---------------------------------------------------------------------------
# Pipeline configuration
# ---------------------------------------------------------------------------

class PairSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    hedged: str
    hedging: str

    @model_validator(mode="after")
    def _distinct(self) -> PairSpec:
        if self.hedged == self.hedging:
            raise ValueError(f"pair hedges {self.hedged} with itself")
        return self

    @property
    def label(self) -> str:
        return f"{self.hedged}_{self.hedging}"

    @classmethod
    def parse(cls, text: str) -> PairSpec:
        """'S:F' -> PairSpec(hedged='S', hedging='F')."""
        hedged, sep, hedging = text.strip().partition(":")
        if not sep or not hedged or not hedging:
            raise ValueError(f"pair '{text}' is not of the form HEDGED:HEDGING")
        return cls(hedged=hedged.strip(), hedging=hedging.strip())


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["ar", "har"] = "ar"
    order: int = Field(default=1, ge=1)


class BootstrapSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    block_length: int = Field(default=250, ge=4)
    reps: int = Field(default=10_000, ge=1)
    seed: int = 0
    bp: float = Field(default=5.0, ge=0.0)
    model: str = "ar1"
    tau: int = Field(default=1, ge=1)
    metrics: list[str] = Field(default_factory=lambda: list(METRIC_NAMES))
    schemes: list[Literal["random_block", "max_entropy"]] = Field(
        default_factory=lambda: ["random_block", "max_entropy"]
    )

    @field_validator("metrics")
    @classmethod
    def _known_metrics(cls, value: list[str]) -> list[str]:
        unknown = sorted(set(value) - set(METRIC_NAMES))
        if unknown:
            raise ValueError(f"unknown bootstrap metrics {unknown}")
        return value


class ScatterSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    metrics: list[str] = Field(default_factory=lambda: list(EFFECTIVENESS_NAMES))
    color_key: Literal["pair_correlation", "pair_type"] = "pair_correlation"


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    data_dir: str = "data"
    output_dir: str = "output"
    symbols: list[str] = Field(default_factory=list)
    pairs: list[PairSpec] = Field(default_factory=list)
    window: TradingWindow = Field(default_factory=TradingWindow)
    missing_day_policy: Literal["drop", "ffill"] = "drop"

    models: list[ModelSpec] = Field(
        default_factory=lambda: [
            ModelSpec(name="ar1", kind="ar", order=1),
            ModelSpec(name="ar5", kind="ar", order=5),
        ]
    )
    base_model: str = "ar1"
    rv_transform: Transform = Transform.LOG
    rcv_transform: Transform = Transform.LEVEL
    tau: list[int] = Field(default_factory=lambda: [1, 10])
    tau_max: int = Field(default=10, ge=1)
    theta_mode: ThetaMode = ThetaMode.EMPIRICAL
    bp: list[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0])
    delta: Literal["quartile"] | float = "quartile"

    train_end: date | None = None
    test_start: date | None = None
    train_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)

    variance_floor: float = Field(default=1e-12, gt=0.0)
    omega_cap: float = Field(default=1e6, gt=0.0)
    annualization: int = Field(default=252, ge=1)
    adf_lag_order: int = Field(default=1, ge=0)
    irf_horizon: int = Field(default=20, ge=0)
    workers: int = Field(default=1, ge=1)

    bootstrap: BootstrapSettings = Field(default_factory=BootstrapSettings)
    scatter: ScatterSettings = Field(default_factory=ScatterSettings)
    asset_classes: dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_ASSET_CLASSES))

    @field_validator("tau")
    @classmethod
    def _positive_tau(cls, value: list[int]) -> list[int]:
        if any(t < 1 for t in value):
            raise ValueError("every tau must be at least 1")
        return sorted(set(value))

    @field_validator("bp")
    @classmethod
    def _non_negative_bp(cls, value: list[float]) -> list[float]:
        if any(b < 0 for b in value):
            raise ValueError("cost levels must be non-negative")
        return value

    @model_validator(mode="after")
    def _cross_checks(self) -> PipelineConfig:
        if self.tau and max(self.tau) > self.tau_max:
            raise ValueError(f"tau {max(self.tau)} exceeds tau_max {self.tau_max}")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError("model names must be unique")
        if self.base_model not in names:
            raise ValueError(f"base_model '{self.base_model}' is not a configured model")
        if self.bootstrap.model not in names:
            raise ValueError(f"bootstrap model '{self.bootstrap.model}' is not a configured model")
        if self.bootstrap.tau not in self.tau:
            raise ValueError(f"bootstrap tau {self.bootstrap.tau} is not a configured tau")
        if self.bootstrap.bp not in self.bp:
            raise ValueError(f"bootstrap cost level {self.bootstrap.bp} is not a configured bp")
        if self.theta_mode is ThetaMode.CLOSED_FORM and self.rv_transform is Transform.LOG:
            raise ValueError("closed-form theta of a log RV fit is on the log scale; use empirical")
        if (self.train_end is None) != (self.test_start is None):
            raise ValueError("train_end and test_start must be given together")
        if self.train_end is not None and self.train_end >= self.test_start:
            raise ValueError("train_end must be before test_start")
        if self.symbols:
            referenced = {s for p in self.pairs for s in (p.hedged, p.hedging)}
            unknown = sorted(referenced - set(self.symbols))
            if unknown:
                raise ValueError(f"pairs reference unknown symbols {unknown}")
        if self.scatter.color_key == "pair_type":
            for p in self.pairs:
                for s in (p.hedged, p.hedging):
                    if s not in self.asset_classes:
                        raise ValueError(f"no asset class for {s}")
        return self

    @property
    def all_symbols(self) -> list[str]:
        """Configured symbols, or the ones the pairs reference (first-seen order)."""
        if self.symbols:
            return list(self.symbols)
        return list(dict.fromkeys(s for p in self.pairs for s in (p.hedged, p.hedging)))

    def model_spec(self, name: str) -> ModelSpec:
        return next(m for m in self.models if m.name == name)

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

class SyntheticSymbol(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    asset_class: Literal["equity", "bond", "commodity"] = "equity"
    mean_log_rv: float = -9.2
    phi: list[float] = Field(default_factory=lambda: [0.6])
    noise_variance: float = Field(default=0.2, gt=0.0)
    start_price: float = Field(default=100.0, gt=0.0)


class SyntheticCorrelation(BaseModel):
    """Day-t correlation is w_t * C + (1 - w_t) * I for the class correlation C.

    logit(w_t) follows a stationary AR process around logit(median_weight), so
    every off-diagonal correlation moves with a common, specifiable AR factor.
    """

    model_config = ConfigDict(frozen=True)

    median_weight: float = Field(default=0.8, gt=0.0, lt=1.0)
    phi: list[float] = Field(default_factory=lambda: [0.9])
    noise_variance: float = Field(default=0.1, ge=0.0)


class SyntheticSpec(BaseModel):
    """Each symbol's log realized variance follows an AR process around mean_log_rv.

    Intraday returns follow a class-block correlation scaled by a daily AR
    factor; each day hits its target realized variance and covariance exactly.
    """

    model_config = ConfigDict(frozen=True)

    n_days: int = Field(default=2000, ge=0)
    start_date: date = date(2015, 1, 2)
    window: TradingWindow = Field(default_factory=TradingWindow)
    symbols: list[SyntheticSymbol] = Field(
        default_factory=lambda: [
            SyntheticSymbol(name=name, asset_class=cls) for name, cls in DEFAULT_ASSET_CLASSES.items()
        ]
    )
    within_class_correlation: float = Field(default=0.6, gt=-1.0, lt=1.0)
    across_class_correlation: float = Field(default=0.2, gt=-1.0, lt=1.0)
    correlation_dynamics: SyntheticCorrelation = Field(default_factory=SyntheticCorrelation)
    burn_in: int = Field(default=200, ge=0)
    allow_nonstationary: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _unique_names(self) -> SyntheticSpec:
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("synthetic symbol names must be unique")
        return self


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------

class ArtifactRecord(BaseModel):
    path: str
    rows: int
    schema_name: str
    sha256: str


class StageRecord(BaseModel):
    status: str
    error: str | None = None


class RunManifest(BaseModel):
    config_hash: str
    versions: dict[str, str] = Field(default_factory=dict)
    seeds: dict[str, int] = Field(default_factory=dict)
    stages: dict[str, StageRecord] = Field(default_factory=dict)
    outputs: list[ArtifactRecord] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    status: str = "completed"

    def rows_of(self, schema_name: str) -> int:
        return sum(a.rows for a in self.outputs if a.schema_name == schema_name)
