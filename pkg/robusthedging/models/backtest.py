"""Backtest and bootstrap result types."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field


@dataclass(frozen=True)
class HedgedReturns:
    """Daily returns of the hedged portfolio over the evaluation dates.

    ``costs`` includes the opening trade |h_0| * bp; ``opening_cost`` repeats
    it so results excluding it can be recovered.
    """

    dates: pd.DatetimeIndex
    r_unhedged: np.ndarray
    r_hedged: np.ndarray
    r_net: np.ndarray
    costs: np.ndarray
    h_applied: np.ndarray
    bp: float
    opening_cost: float = 0.0

    def __post_init__(self) -> None:
        if (self.costs < 0).any():
            raise ValueError("costs must be non-negative")
        if not np.array_equal(self.r_net, self.r_hedged - self.costs):
            raise ValueError("r_net must equal r_hedged - costs")

    def __len__(self) -> int:
        return len(self.dates)


class Effectiveness(BaseModel):
    model_config = ConfigDict(frozen=True)

    HE: float
    HE_C: float
    HE_R: float
    delta_threshold: float


class MetricsReport(BaseModel):
    """Effectiveness plus performance / risk metrics at one cost level.

    VaR and ES are loss-positive.
    """

    model_config = ConfigDict(frozen=True)

    HE: float
    HE_C: float
    HE_R: float
    pnl: float
    sharpe: float
    omega: float
    max_drawdown: float = Field(ge=0.0)
    var95: float
    es95: float
    delta_threshold: float
    cost_bp: float
    total_costs: float = 0.0
    omega_capped: bool = False


class BootstrapScheme(str, Enum):
    RANDOM_BLOCK = "random_block"
    MAX_ENTROPY = "max_entropy"


class BootstrapResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    metric_name: str
    mean_difference: float
    p_value: float = Field(ge=0.0, le=1.0)
    replications: int = Field(gt=0)
    block_length: int = Field(gt=0)
    scheme: BootstrapScheme
    sample_difference: float = 0.0
