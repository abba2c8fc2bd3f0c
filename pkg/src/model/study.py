import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.model.estimate import ComparisonRow
from src.model.trajectory import ScenarioId
from src.model.weight import AUC, CFB, OLS, BetaWeight


class Estimand(Enum):
    CFB = "cfb"
    OLS = "ols"
    AUC = "auc"

    @property
    def weight(self) -> BetaWeight:
        return {Estimand.CFB: CFB, Estimand.OLS: OLS, Estimand.AUC: AUC}[self]


class GridKind(Enum):
    EQUAL = "equal"
    GAUSS_LEGENDRE = "gl"


class StudyConfig(BaseModel):
    """
    Parameter grid of an analytic study. Defaults are rho = 0.6 with
    sigma in (sqrt 2, sqrt 3, sqrt 5) and k in (0.6, 0.7, 0.8, 0.9) over m = 5..10.
    """

    model_config = ConfigDict(frozen=True)

    scenarios: tuple[ScenarioId, ...] = tuple(ScenarioId)
    m_values: tuple[int, ...] = (5, 6, 7, 8, 9, 10)
    k_values: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    sigma_values: tuple[float, ...] = (math.sqrt(2), math.sqrt(3), math.sqrt(5))
    rho: float = Field(0.6, gt=0, lt=1)
    grid_kind: GridKind = GridKind.EQUAL
    use_smart: bool = False
    estimands: tuple[Estimand, ...] = tuple(Estimand)

    @field_validator("scenarios", "m_values", "k_values", "sigma_values", "estimands")
    @classmethod
    def _nonempty_unique(cls, values: tuple) -> tuple:
        if not values:
            raise ValueError("parameter lists must not be empty")
        return tuple(dict.fromkeys(values))

    @field_validator("sigma_values")
    @classmethod
    def _positive_sigma(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        if any(not s > 0 for s in values):
            raise ValueError(f"sigma values must be positive, got {values}")
        return values

    @model_validator(mode="after")
    def _check_grid(self) -> "StudyConfig":
        bad_k = [k for k in self.k_values if not self.rho <= k <= 1]
        if bad_k:
            raise ValueError(f"k must satisfy ρ ≤ k ≤ 1 with ρ={self.rho}, got {bad_k}")
        smallest = 3 if self.grid_kind == GridKind.GAUSS_LEGENDRE else 2
        if min(self.m_values) < smallest:
            raise ValueError(
                f"m must be at least {smallest} for the {self.grid_kind.value} grid, got {min(self.m_values)}"
            )
        return self


class StudyTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: tuple[ComparisonRow, ...]
    metadata: dict[str, Any]


class Table1Row(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int
    discrete: float
    continuous: float
