import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class QuadratureScheme(BaseModel):
    """Gauss-Legendre nodes in (-1, 1), ascending, with their positive weights."""

    model_config = ConfigDict(frozen=True)

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    @model_validator(mode="after")
    def _check_scheme(self) -> "QuadratureScheme":
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ValueError("a quadrature scheme needs matching, nonempty nodes and weights")
        if any(not -1.0 < x < 1.0 for x in self.nodes):
            raise ValueError("quadrature nodes must lie in (-1, 1)")
        if any(a <= 0 for a in self.weights):
            raise ValueError("quadrature weights must be positive")
        return self

    @property
    def order(self) -> int:
        return len(self.nodes)

    def node_array(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=float)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def unit_interval(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes t = 0.5(x + 1) on [0, 1] with weights halved to match."""
        return 0.5 * (self.node_array() + 1.0), 0.5 * self.weight_array()
