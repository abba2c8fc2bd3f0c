import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.model.covariance import EffectCovariance
from src.model.grid import TimeGrid
from src.model.trajectory import ScenarioId


class EstimateBundle(BaseModel):
    """Visit-level treatment effect estimates and their covariance, as reported by an MMRM fit."""

    model_config = ConfigDict(frozen=True)

    grid: TimeGrid
    delta_hat: tuple[float, ...]
    sigma_hat: EffectCovariance

    @model_validator(mode="after")
    def _check_alignment(self) -> "EstimateBundle":
        if len(self.delta_hat) != self.grid.m:
            raise ValueError(
                f"expected {self.grid.m} effect estimates, got {len(self.delta_hat)}"
            )
        if not self.sigma_hat.grid.matches(self.grid):
            raise ValueError("covariance grid does not match the effect grid")
        if not all(math.isfinite(d) for d in self.delta_hat):
            raise ValueError("effect estimates must be finite")
        return self

    def delta_array(self) -> np.ndarray:
        return np.asarray(self.delta_hat, dtype=float)


class PprResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimand_id: str
    point: float
    variance: float = Field(ge=0)
    se: float = Field(ge=0)
    z_squared: float = Field(ge=0)

    @classmethod
    def from_point_variance(cls, estimand_id: str, point: float, variance: float) -> "PprResult":
        """
        Derive se and Z^2 = (point / se)^2. A zero standard error gives Z^2 = 0 for a
        zero point and infinity otherwise.
        """
        se = math.sqrt(variance)
        if se > 0:
            z_squared = (point / se) ** 2
        else:
            z_squared = 0.0 if point == 0 else math.inf
        return cls(
            estimand_id=estimand_id, point=point, variance=variance, se=se, z_squared=z_squared
        )


class RelativeMetrics(BaseModel):
    """Percentages relative to a reference estimand; sample size is None when undefined."""

    model_config = ConfigDict(frozen=True)

    signal_pct: float
    se_pct: float
    rel_sample_size_pct: float | None


class ComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: ScenarioId
    estimand_id: str
    m: int
    k: float
    sigma_end: float
    grid_kind: str
    smart: bool
    signal_pct: float
    se_pct: float
    rel_sample_size_pct: float | None
    optimal_sample_size_pct: float
