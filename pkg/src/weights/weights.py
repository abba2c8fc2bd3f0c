import math

import numpy as np
from numpy.typing import ArrayLike
from pydantic import ValidationError

from src.model.covariance import EffectCovariance
from src.model.grid import TimeGrid
from src.model.weight import (
    AUC,
    CFB,
    OLS,
    BetaWeight,
    Contrast,
    ContrastKind,
    DiscreteWeights,
    PartialAucWeight,
    PowerAucWeight,
    WeightSpec,
    cfb_ols_average,
)
from src.quadrature.legendre import gauss_legendre, integrate_piecewise
from src.util.errors import InvalidArgumentError, ModelError
from src.util.logging import logger
from src.util.tolerance import CONTRAST_SUM_TOL, QUADRATURE_SUM_TOL

KINK_TOL = 1e-12


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise InvalidArgumentError(f"weight functions live on [0, 1], got t={t}")


def weight_eval(spec: WeightSpec, t: float) -> float:
    _check_time(t)
    return float(spec.value(t))


def weight_deriv(spec: WeightSpec, t: float) -> float:
    """
    w'(t). At the PartialAUC kink (t = 0.5) the left derivative is reported.
    """
    _check_time(t)
    if any(abs(t - p) <= KINK_TOL for p in spec.breakpoints):
        logger.debug("Derivative of %s requested at kink t=%s, using left derivative", spec, t)
    return float(spec.derivative(t))


def cfb_discrete_weights(grid: TimeGrid) -> DiscreteWeights:
    """Weights proportional to interval length; the PPR is f(1) - f(0)."""
    return DiscreteWeights(grid=grid, w=tuple(grid.spacing().tolist()))


def ols_discrete_weights(grid: TimeGrid) -> DiscreteWeights:
    """
    L_i = (t_i - t_{i-1}) * sum_{j>=i} (t_j - tbar) / sum_k (t_k - tbar)^2, i = 2..m.
    The induced PPR is the OLS slope through the m points.
    """
    t = grid.as_array()
    centered = t - t.mean()
    denominator = float(np.dot(centered, centered))
    # tail sums sum_{j>=i} (t_j - tbar) for i = 2..m
    tails = np.cumsum(centered[::-1])[::-1][1:]
    weights = grid.spacing() * tails / denominator
    if np.any(weights <= 0):
        logger.error("OLS weights not strictly positive on %s: %s", grid, weights)
        raise InvalidArgumentError(f"OLS weights are not strictly positive on {grid}")
    return DiscreteWeights(grid=grid, w=tuple(weights.tolist()))


def ols_equal_spaced_weights(m: int) -> DiscreteWeights:
    """Closed form L_i = 6(i-1)(m+1-i) / (m(m-1)(m+1)) on the equal-spaced grid."""
    if m < 2:
        raise InvalidArgumentError(f"OLS weights need m >= 2, got {m}")
    i = np.arange(2, m + 1)
    weights = 6 * (i - 1) * (m + 1 - i) / (m * (m - 1) * (m + 1))
    return DiscreteWeights(grid=TimeGrid.equal_spaced(m), w=tuple(weights.tolist()))


def auc_discrete_weights(m: int, grid: TimeGrid | None = None) -> DiscreteWeights:
    """
    A_i = 2(m-i+1) / (m(m-1)), derived under equal spacing only.
    :param grid: Optional grid to check against; it must be the equal-spaced grid of m points.
    """
    if m < 2:
        raise InvalidArgumentError(f"AUC weights need m >= 2, got {m}")
    if grid is not None and (grid.m != m or not grid.is_equal_spaced()):
        logger.error("AUC weights requested on a non-equal-spaced grid %s", grid)
        raise InvalidArgumentError("AUC discrete weights are defined only on an equal-spaced grid")
    i = np.arange(2, m + 1)
    weights = 2 * (m - i + 1) / (m * (m - 1))
    return DiscreteWeights(grid=grid or TimeGrid.equal_spaced(m), w=tuple(weights.tolist()))


def interval_weights(spec: WeightSpec, grid: TimeGrid, nodes: int = 16) -> DiscreteWeights:
    """
    Discretize a weight function by its mass on each visit interval, w_i = int_{t_{i-1}}^{t_i} w.
    Uniform weight gives the CFB weights; the step function of the result is w_c.
    """
    scheme = gauss_legendre(nodes)
    t = grid.points
    masses = np.array(
        [
            integrate_piecewise(spec.value, lo, hi, scheme, spec.breakpoints)
            for lo, hi in zip(t, t[1:])
        ]
    )
    masses = np.clip(masses, 0.0, None)
    return DiscreteWeights(grid=grid, w=tuple((masses / masses.sum()).tolist()))


def step_weight(dw: DiscreteWeights, t: ArrayLike) -> np.ndarray:
    """
    w_c(t) = w_i / (t_i - t_{i-1}) on (t_{i-1}, t_i]; the continuous weight whose PPR
    equals the discrete PPR of dw.
    """
    t = np.asarray(t, dtype=float)
    heights = dw.as_array() / dw.grid.spacing()
    index = np.clip(np.searchsorted(dw.grid.as_array(), t, side="left") - 1, 0, dw.grid.m - 2)
    return heights[index]


def contrast_from_weights(dw: DiscreteWeights) -> Contrast:
    """
    v_1 = -w_2/h_2, v_i = w_i/h_i - w_{i+1}/h_{i+1}, v_m = w_m/h_m with h_i = t_i - t_{i-1}.
    """
    slopes = dw.as_array() / dw.grid.spacing()
    v = np.empty(dw.grid.m)
    v[0] = -slopes[0]
    v[1:-1] = slopes[:-1] - slopes[1:]
    v[-1] = slopes[-1]
    coeffs = v.tolist()
    drift = math.fsum(coeffs)
    scale = max(1.0, math.fsum(abs(c) for c in coeffs))
    if abs(drift) < CONTRAST_SUM_TOL * scale:
        coeffs[-1] = -math.fsum(coeffs[:-1])
    return Contrast(grid=dw.grid, coeffs=tuple(coeffs), kind=ContrastKind.EXACT_DISCRETE)


def endpoint_contrast(grid: TimeGrid) -> Contrast:
    """(-1, 0, ..., 0, 1): the CFB contrast on any grid."""
    return contrast_from_weights(cfb_discrete_weights(grid))


def gauss_legendre_grid(m: int) -> TimeGrid:
    """{0} with the m-2 Gauss-Legendre nodes mapped to (0, 1), then {1}."""
    if m < 3:
        raise InvalidArgumentError(f"a Gauss-Legendre grid needs m >= 3, got {m}")
    t, _ = gauss_legendre(m - 2).unit_interval()
    return TimeGrid(points=(0.0, *t.tolist(), 1.0))


def quadrature_contrast(spec: WeightSpec, m: int) -> Contrast:
    """
    q_1 = -w(0), q_m = w(1), q_i = -0.5 a_i w'(t_i) on the augmented Gauss-Legendre grid.
    """
    grid = gauss_legendre_grid(m)
    scheme = gauss_legendre(m - 2)
    interior = grid.as_array()[1:-1]
    for kink in spec.breakpoints:
        if np.any(np.abs(interior - kink) <= KINK_TOL):
            logger.error("Quadrature node falls on the kink t=%s of %s", kink, spec)
            raise InvalidArgumentError(
                f"{spec} is not differentiable at node t={kink}; choose an even number of interior nodes"
            )
    derivative = np.asarray(spec.derivative(interior), dtype=float)
    if not np.all(np.isfinite(derivative)):
        raise InvalidArgumentError(f"{spec} has no finite derivative at every interior node")
    q = np.empty(m)
    q[0] = -float(spec.value(0.0))
    q[-1] = float(spec.value(1.0))
    q[1:-1] = -0.5 * scheme.weight_array() * derivative
    total = math.fsum(q.tolist())
    if abs(total) > QUADRATURE_SUM_TOL:
        logger.warning(
            "Quadrature contrast for %s with m=%d sums to %.3e; the rule does not integrate w' exactly",
            spec,
            m,
            total,
        )
    return Contrast(grid=grid, coeffs=tuple(q.tolist()), kind=ContrastKind.QUADRATURE)


def _matrix(sigma: EffectCovariance | ArrayLike) -> np.ndarray:
    if isinstance(sigma, EffectCovariance):
        return sigma.as_array()
    return np.asarray(sigma, dtype=float)


def smart_first_coefficient(c: Contrast, sigma: EffectCovariance | ArrayLike) -> Contrast:
    """
    Replace the baseline coefficient by v_1* = -sum_{i>=2} v_i sigma_i1 / sigma_11,
    the choice minimizing the contrast variance given Delta(0) = 0.
    """
    matrix = _matrix(sigma)
    if matrix.shape != (c.grid.m, c.grid.m):
        raise InvalidArgumentError(
            f"covariance of shape {matrix.shape} does not match a contrast of length {c.grid.m}"
        )
    s11 = matrix[0, 0]
    if not s11 > 0:
        logger.error("Baseline variance sigma_11=%s is not positive", s11)
        raise ModelError(f"baseline variance sigma_11 must be positive, got {s11}")
    v = c.as_array()
    v[0] = -float(np.dot(v[1:], matrix[1:, 0])) / s11
    return c.model_copy(update={"coeffs": tuple(v.tolist()), "baseline_adjusted": True})


def collapse_near_endpoints(c: Contrast) -> Contrast:
    """
    Fold the second coefficient into the first and the second-to-last into the last.
    Models a design that skips the visits closest to baseline and end of follow-up,
    analysing Delta(t_2) as Delta(t_1) and Delta(t_{m-1}) as Delta(t_m).
    The result lives on the grid without t_2 and t_{m-1}.
    """
    if c.grid.m < 5:
        raise InvalidArgumentError(
            f"collapsing the near-endpoint visits needs m >= 5, got {c.grid.m}"
        )
    v = list(c.coeffs)
    t = list(c.grid.points)
    coeffs = (v[0] + v[1], *v[2:-2], v[-2] + v[-1])
    grid = TimeGrid(points=(t[0], *t[2:-2], t[-1]))
    return Contrast(
        grid=grid, coeffs=coeffs, kind=c.kind, baseline_adjusted=c.baseline_adjusted
    )


NAMED_ESTIMANDS = ("cfb", "ols", "auc", "cfb-ols", "partial-auc")


def parse_estimand(text: str) -> WeightSpec:
    """
    Read an estimand name: cfb, ols, auc, cfb-ols, partial-auc, beta:a,b or power-auc:alpha.
    :raises InvalidArgumentError: On unknown names or out-of-range parameters.
    """
    name, _, params = text.strip().lower().partition(":")
    try:
        match name, params:
            case "cfb", "":
                return CFB
            case "ols", "":
                return OLS
            case "auc", "":
                return AUC
            case "cfb-ols", "":
                return cfb_ols_average()
            case "partial-auc", "":
                return PartialAucWeight()
            case "beta", _ if params:
                a, b = (float(p) for p in params.split(","))
                return BetaWeight(a=a, b=b)
            case "power-auc", _ if params:
                return PowerAucWeight(alpha=float(params))
    except (ValueError, ValidationError) as e:
        logger.error("Invalid estimand %r: %s", text, e)
        raise InvalidArgumentError(f"invalid estimand {text!r}: {e}") from e
    raise InvalidArgumentError(
        f"unknown estimand {text!r}; expected one of {', '.join(NAMED_ESTIMANDS)}, beta:a,b or power-auc:alpha"
    )


def is_gauss_legendre_grid(grid: TimeGrid) -> bool:
    return grid.m >= 3 and grid.matches(gauss_legendre_grid(grid.m))


def resolve_contrast(spec: WeightSpec, grid: TimeGrid) -> tuple[DiscreteWeights | None, Contrast]:
    """
    The contrast a weight induces on a visit grid. CFB is always the endpoint contrast.
    On an augmented Gauss-Legendre grid that is not also equal-spaced every other weight
    uses the quadrature contrast. Elsewhere OLS uses the least-squares weights, AUC its
    closed form on equal spacing, and any other weight its mass on each visit interval.
    """
    if spec == CFB:
        dw = cfb_discrete_weights(grid)
        return dw, contrast_from_weights(dw)
    if not grid.is_equal_spaced() and is_gauss_legendre_grid(grid):
        return None, quadrature_contrast(spec, grid.m)
    if spec == OLS:
        dw = ols_discrete_weights(grid)
    elif spec == AUC and grid.is_equal_spaced():
        dw = auc_discrete_weights(grid.m, grid)
    else:
        dw = interval_weights(spec, grid)
    return dw, contrast_from_weights(dw)
