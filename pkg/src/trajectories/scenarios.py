import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike
from scipy.stats import norm

from src.model.trajectory import ScenarioId, TrajectoryFn
from src.quadrature.legendre import normal_cdf
from src.util.errors import InvalidArgumentError

# Control arm mean f(t) = -2.5t^3 + 6t^2 + 5t + 0.5
CONTROL_POLYNOMIAL = Polynomial([0.5, 5.0, 6.0, -2.5])

# Increasing-then-decreasing effect: 1.05 times a normal density, mean 0.55, sd 0.25
PEAK_SCALE = 1.05
PEAK_MEAN = 0.55
PEAK_SD = 0.25


def _check_times(t: ArrayLike) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise InvalidArgumentError("scenario trajectories are defined on [0, 1]")
    return t


def control_mean() -> TrajectoryFn:
    derivative = CONTROL_POLYNOMIAL.deriv()
    return TrajectoryFn(
        value=lambda t: CONTROL_POLYNOMIAL(np.asarray(t, dtype=float)),
        derivative=lambda t: derivative(np.asarray(t, dtype=float)),
        label="control",
    )


def _rate(s: ScenarioId, t: np.ndarray) -> np.ndarray:
    match s:
        case ScenarioId.DECREASING:
            return 0.45 * (-1.1 * t + 2) ** 2
        case ScenarioId.CONSTANT:
            return np.ones_like(t)
        case ScenarioId.INCREASING:
            return 1.2 * (1 - np.exp(-6 * t))
        case ScenarioId.INC_THEN_DEC:
            return PEAK_SCALE * norm.pdf(t, loc=PEAK_MEAN, scale=PEAK_SD)
    raise InvalidArgumentError(f"unknown scenario {s!r}")


def _cumulative(s: ScenarioId, t: np.ndarray) -> np.ndarray:
    match s:
        case ScenarioId.DECREASING:
            return 0.45 * (8 - (2 - 1.1 * t) ** 3) / 3.3
        case ScenarioId.CONSTANT:
            return t.copy()
        case ScenarioId.INCREASING:
            return 1.2 * (t + np.expm1(-6 * t) / 6)
        case ScenarioId.INC_THEN_DEC:
            lower = normal_cdf(-PEAK_MEAN / PEAK_SD)
            return PEAK_SCALE * (normal_cdf((t - PEAK_MEAN) / PEAK_SD) - lower)
    raise InvalidArgumentError(f"unknown scenario {s!r}")


def effect_rate(s: ScenarioId, t: ArrayLike) -> np.ndarray | float:
    """Delta'(t), the control-minus-treated difference in progression speed."""
    result = _rate(s, _check_times(t))
    return float(result) if np.ndim(result) == 0 else result


def effect_cumulative(s: ScenarioId, t: ArrayLike) -> np.ndarray | float:
    """Delta(t) = integral of Delta' from 0 to t, in closed form."""
    result = _cumulative(s, _check_times(t))
    return float(result) if np.ndim(result) == 0 else result


def effect_trajectory(s: ScenarioId) -> TrajectoryFn:
    return TrajectoryFn(
        value=lambda t: _cumulative(s, np.asarray(t, dtype=float)),
        derivative=lambda t: _rate(s, np.asarray(t, dtype=float)),
        label=f"delta[{s.value}]",
    )


def treated_mean(s: ScenarioId) -> TrajectoryFn:
    """h(t) = f(t) - Delta(t)."""
    treated = control_mean() - effect_trajectory(s)
    return treated.model_copy(update={"label": f"treated[{s.value}]"})
