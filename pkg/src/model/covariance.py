from enum import Enum
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.covariance.linalg import cholesky_factor
from src.model.grid import TimeGrid
from src.util.tolerance import ASYMMETRY_REPAIR_TOL, SYMMETRY_TOL


class SdProfile(Enum):
    INDEX_LINEAR = "index-linear"
    TIME_LINEAR = "time-linear"


class ArWithK(BaseModel):
    """
    Correlation k (rho/k)^|t_i - t_j| with standard deviations rising from 1 to sigma_end.
    k = rho is compound symmetry.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["ar-with-k"] = "ar-with-k"
    rho: float = Field(gt=0, lt=1)
    k: float
    sigma_end: float = Field(gt=0)
    sd_profile: SdProfile = SdProfile.INDEX_LINEAR

    @model_validator(mode="after")
    def _check_k(self) -> "ArWithK":
        if not self.rho <= self.k <= 1:
            raise ValueError(
                f"k must satisfy ρ ≤ k ≤ 1, got rho={self.rho}, k={self.k}"
            )
        return self


class CompoundSymmetric(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["compound-symmetric"] = "compound-symmetric"
    sd: float = Field(gt=0)
    corr: float = Field(ge=-1, le=1)


class ExponentialDecay(BaseModel):
    """Covariance sd^2 * base^|t - s|."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["exponential-decay"] = "exponential-decay"
    sd: float = Field(gt=0)
    base: float = Field(gt=0, lt=1)


class Unstructured(BaseModel):
    """
    An explicit covariance matrix, typically read from a file.
    Asymmetry up to 1e-8 is repaired as (A + A^T)/2; anything larger is rejected.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["unstructured"] = "unstructured"
    matrix: tuple[tuple[float, ...], ...]

    @model_validator(mode="before")
    @classmethod
    def _symmetrize(cls, data):
        if not isinstance(data, dict) or "matrix" not in data:
            return data
        a = np.asarray(data["matrix"], dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"covariance matrix must be square, got shape {a.shape}")
        asymmetry = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if asymmetry > ASYMMETRY_REPAIR_TOL:
            raise ValueError(f"covariance matrix is not symmetric (max asymmetry {asymmetry:.3e})")
        a = 0.5 * (a + a.T)
        return {**data, "matrix": tuple(tuple(row) for row in a.tolist())}

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)


CovarianceSpec = Annotated[
    Union[ArWithK, CompoundSymmetric, ExponentialDecay, Unstructured],
    Field(discriminator="kind"),
]


class EffectCovariance(BaseModel):
    """Covariance of the visit-level effect estimates on a grid; symmetric positive definite."""

    model_config = ConfigDict(frozen=True)

    grid: TimeGrid
    matrix: tuple[tuple[float, ...], ...]

    @model_validator(mode="after")
    def _check_matrix(self) -> "EffectCovariance":
        a = self.as_array()
        if a.shape != (self.grid.m, self.grid.m):
            raise ValueError(
                f"covariance must be {self.grid.m}x{self.grid.m} for this grid, got {a.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(a))))
        if float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cholesky_factor(a)
        return self

    @classmethod
    def from_array(cls, grid: TimeGrid, matrix: np.ndarray) -> "EffectCovariance":
        return cls(grid=grid, matrix=tuple(tuple(row) for row in np.asarray(matrix).tolist()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)
