from collections.abc import Callable
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict


class ScenarioId(Enum):
    DECREASING = "decreasing"
    CONSTANT = "constant"
    INCREASING = "increasing"
    INC_THEN_DEC = "inc-then-dec"


class TrajectoryFn(BaseModel):
    """A smooth mean trajectory on [0, 1] with its derivative; both vectorized over numpy arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Callable[[ArrayLike], np.ndarray]
    derivative: Callable[[ArrayLike], np.ndarray]
    label: str = ""

    def __call__(self, t: ArrayLike) -> np.ndarray:
        return self.value(t)

    def __sub__(self, other: "TrajectoryFn") -> "TrajectoryFn":
        return TrajectoryFn(
            value=lambda t: self.value(t) - other.value(t),
            derivative=lambda t: self.derivative(t) - other.derivative(t),
            label=f"{self.label} - {other.label}",
        )

    def scaled(self, factor: float) -> "TrajectoryFn":
        return TrajectoryFn(
            value=lambda t: factor * self.value(t),
            derivative=lambda t: factor * self.derivative(t),
            label=f"{factor:g}*{self.label}",
        )
