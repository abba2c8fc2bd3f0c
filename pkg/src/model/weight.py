import math
from enum import Enum
from typing import Annotated, ClassVar, Literal, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import beta as beta_function

from src.model.grid import TimeGrid
from src.util.tolerance import CONTRAST_SUM_TOL, WEIGHT_SUM_TOL


class BetaWeight(BaseModel):
    """Beta(a, b) probability density used as a weight on [0, 1]."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["beta"] = "beta"
    a: float = Field(ge=1, description="First shape parameter")
    b: float = Field(ge=1, description="Second shape parameter")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def value(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            density = t ** (self.a - 1) * (1 - t) ** (self.b - 1)
        return density / beta_function(self.a, self.b)

    def derivative(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        # a == 1 or b == 1 drop the matching term, so 0 * inf never appears at an endpoint
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.a != 1:
                out = out + (self.a - 1) * t ** (self.a - 2) * (1 - t) ** (self.b - 1)
            if self.b != 1:
                out = out - (self.b - 1) * t ** (self.a - 1) * (1 - t) ** (self.b - 2)
        return out / beta_function(self.a, self.b)

    def __str__(self):
        return f"Beta({self.a:g},{self.b:g})"


class PartialAucWeight(BaseModel):
    """w(t) proportional to min{1 - t, 0.5}, normalized by 3/8."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["partial-auc"] = "partial-auc"

    NORMALIZER: ClassVar[float] = 3.0 / 8.0
    KINK: ClassVar[float] = 0.5

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.KINK,)

    def value(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.minimum(1 - t, 0.5) / self.NORMALIZER

    def derivative(self, t: ArrayLike) -> np.ndarray:
        # left derivative at the kink: flat part owns t = 0.5
        t = np.asarray(t, dtype=float)
        return np.where(t <= self.KINK, 0.0, -1.0 / self.NORMALIZER)

    def __str__(self):
        return "PartialAUC"


class PowerAucWeight(BaseModel):
    """w(t) proportional to 1 - t^alpha, normalized by alpha / (alpha + 1)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["power-auc"] = "power-auc"
    alpha: float = Field(gt=0, description="Power of t in 1 - t^alpha")

    @property
    def normalizer(self) -> float:
        return self.alpha / (self.alpha + 1)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def value(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (1 - t**self.alpha) / self.normalizer

    def derivative(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.alpha * t ** (self.alpha - 1) / self.normalizer

    def __str__(self):
        return f"PowerAUC({self.alpha:g})"


class MixtureComponent(BaseModel):
    model_config = ConfigDict(frozen=True)

    coefficient: float = Field(ge=0)
    spec: "WeightSpec"


class MixtureWeight(BaseModel):
    """Convex combination of other weight functions."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["mixture"] = "mixture"
    components: tuple[MixtureComponent, ...]

    @model_validator(mode="after")
    def _check_coefficients(self) -> "MixtureWeight":
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        total = math.fsum(c.coefficient for c in self.components)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"mixture coefficients must sum to 1, got {total}")
        return self

    @property
    def breakpoints(self) -> tuple[float, ...]:
        points = {p for c in self.components for p in c.spec.breakpoints}
        return tuple(sorted(points))

    def value(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return sum(c.coefficient * c.spec.value(t) for c in self.components)

    def derivative(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return sum(c.coefficient * c.spec.derivative(t) for c in self.components)

    def __str__(self):
        parts = " + ".join(f"{c.coefficient:g}*{c.spec}" for c in self.components)
        return f"Mixture({parts})"


WeightSpec = Annotated[
    Union[BetaWeight, PartialAucWeight, PowerAucWeight, MixtureWeight],
    Field(discriminator="kind"),
]

MixtureComponent.model_rebuild()

# Named aliases
CFB = BetaWeight(a=1, b=1)
OLS = BetaWeight(a=2, b=2)
AUC = BetaWeight(a=1, b=2)


def cfb_ols_average() -> MixtureWeight:
    """w(t) = 0.5 + 0.5 * 6t(1 - t), the equal mix of the CFB and OLS weights."""
    return MixtureWeight(
        components=(
            MixtureComponent(coefficient=0.5, spec=CFB),
            MixtureComponent(coefficient=0.5, spec=OLS),
        )
    )


class DiscreteWeights(BaseModel):
    """Weights w_2..w_m on the local slopes of a TimeGrid."""

    model_config = ConfigDict(frozen=True)

    grid: TimeGrid
    w: tuple[float, ...]

    @model_validator(mode="after")
    def _check_weights(self) -> "DiscreteWeights":
        if len(self.w) != self.grid.m - 1:
            raise ValueError(
                f"expected {self.grid.m - 1} weights for a grid of {self.grid.m} points, got {len(self.w)}"
            )
        if any(wi < 0 for wi in self.w):
            raise ValueError(f"discrete weights must be nonnegative, got {self.w}")
        total = math.fsum(self.w)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"discrete weights must sum to 1, got {total}")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)


class ContrastKind(Enum):
    EXACT_DISCRETE = "exact-discrete"
    QUADRATURE = "quadrature"


class Contrast(BaseModel):
    """
    Coefficients applied to visit-level values; the computational form of a PPR.
    ``baseline_adjusted`` marks a contrast whose first coefficient was replaced by the
    variance-minimizing choice, which no longer sums to zero.
    """

    model_config = ConfigDict(frozen=True)

    grid: TimeGrid
    coeffs: tuple[float, ...]
    kind: ContrastKind
    baseline_adjusted: bool = False

    @field_validator("coeffs")
    @classmethod
    def _finite(cls, coeffs: tuple[float, ...]) -> tuple[float, ...]:
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"contrast coefficients must be finite, got {coeffs}")
        return coeffs

    @model_validator(mode="after")
    def _check_contrast(self) -> "Contrast":
        if len(self.coeffs) != self.grid.m:
            raise ValueError(
                f"expected {self.grid.m} coefficients, got {len(self.coeffs)}"
            )
        if self.kind == ContrastKind.EXACT_DISCRETE and not self.baseline_adjusted:
            drift = math.fsum(self.coeffs)
            if abs(drift) > CONTRAST_SUM_TOL:
                raise ValueError(f"exact-discrete contrast must sum to 0, got {drift}")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def apply(self, values: ArrayLike) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.grid.m,):
            raise ValueError(
                f"contrast of length {self.grid.m} applied to {values.shape[0] if values.ndim else 0} values"
            )
        return math.fsum(self.as_array() * values)
