import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from src.util.tolerance import GRID_MATCH_TOL


class TimeGrid(BaseModel):
    """
    Ordered visit times on the standardized follow-up [0, 1].
    Every discrete object in the package is indexed by one of these.
    """

    model_config = ConfigDict(frozen=True)

    points: tuple[float, ...]

    @field_validator("points")
    @classmethod
    def _check_points(cls, points: tuple[float, ...]) -> tuple[float, ...]:
        if len(points) < 2:
            raise ValueError(f"a time grid needs at least 2 points, got {len(points)}")
        if points[0] != 0.0:
            raise ValueError(f"first grid point must be 0, got {points[0]}")
        if points[-1] != 1.0:
            raise ValueError(f"last grid point must be 1, got {points[-1]}")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ValueError("grid points must be strictly increasing")
        return points

    @classmethod
    def equal_spaced(cls, m: int) -> "TimeGrid":
        if m < 2:
            raise ValueError(f"an equal-spaced grid needs m >= 2, got {m}")
        points = [i / (m - 1) for i in range(m)]
        return cls(points=tuple(points))

    @property
    def m(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def spacing(self) -> np.ndarray:
        """Interval lengths t_i - t_{i-1} for i = 2..m."""
        return np.diff(self.as_array())

    def is_equal_spaced(self, tol: float = GRID_MATCH_TOL) -> bool:
        h = self.spacing()
        return bool(np.all(np.abs(h - 1.0 / (self.m - 1)) <= tol))

    def matches(self, other: "TimeGrid", tol: float = GRID_MATCH_TOL) -> bool:
        if self.m != other.m:
            return False
        return bool(np.all(np.abs(self.as_array() - other.as_array()) <= tol))

    def __str__(self):
        return f"TimeGrid(m={self.m}, points={[round(p, 6) for p in self.points]})"
