import math
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import beta as beta_distribution

from src.covariance.linalg import spd_solve
from src.model.covariance import EffectCovariance
from src.model.estimate import EstimateBundle, PprResult, RelativeMetrics
from src.model.trajectory import ScenarioId, TrajectoryFn
from src.model.weight import Contrast, DiscreteWeights, WeightSpec
from src.quadrature.legendre import gauss_legendre, integrate, integrate_piecewise
from src.trajectories.scenarios import effect_cumulative, effect_trajectory
from src.util.env import get_settings
from src.util.errors import InvalidArgumentError, ModelError
from src.util.logging import logger
from src.util.tolerance import VARIANCE_TOL
from src.weights.weights import smart_first_coefficient

MIN_NODES = 8


class DecompositionCheck(NamedTuple):
    lhs: float
    rhs: float


def _check_nodes(nodes: int | None) -> int:
    if nodes is None:
        nodes = get_settings().PPR_QUADRATURE_NODES
    if nodes < MIN_NODES:
        raise InvalidArgumentError(f"continuous PPRs need at least {MIN_NODES} nodes, got {nodes}")
    return nodes


def _matrix(sigma: EffectCovariance | ArrayLike) -> np.ndarray:
    if isinstance(sigma, EffectCovariance):
        return sigma.as_array()
    return np.asarray(sigma, dtype=float)


def discrete_ppr(values: ArrayLike, dw: DiscreteWeights) -> float:
    """sum_{i>=2} w_i (f(t_i) - f(t_{i-1})) / (t_i - t_{i-1})."""
    values = np.asarray(values, dtype=float)
    if values.shape != (dw.grid.m,):
        raise InvalidArgumentError(
            f"expected {dw.grid.m} values for {dw.grid}, got {values.size}"
        )
    slopes = np.diff(values) / dw.grid.spacing()
    return math.fsum((dw.as_array() * slopes).tolist())


def continuous_ppr(f: TrajectoryFn, spec: WeightSpec, nodes: int | None = None) -> float:
    """
    Integral of w(t) f'(t) over [0, 1] by Gauss-Legendre quadrature, split at the
    weight's kinks.
    :param nodes: Quadrature order; defaults to PPR_QUADRATURE_NODES.
    :raises IntegrationDomainError: If w f' is not finite at a node.
    """
    nodes = _check_nodes(nodes)
    return integrate_piecewise(
        lambda t: spec.value(t) * f.derivative(t),
        0.0,
        1.0,
        gauss_legendre(nodes),
        spec.breakpoints,
    )


def wls_slope_beta(f: TrajectoryFn, a: float, b: float, nodes: int | None = None) -> float:
    """
    Slope of the least-squares line through f weighted by the Beta(a-1, b-1) density.
    Equals the continuous PPR of f under the Beta(a, b) weight.
    """
    if not (a > 1 and b > 1):
        raise InvalidArgumentError(f"weighted slope needs a > 1 and b > 1, got a={a}, b={b}")
    nodes = _check_nodes(nodes)
    scheme = gauss_legendre(nodes)
    density = beta_distribution(a - 1, b - 1)
    mean = density.mean()
    numerator = integrate(lambda t: density.pdf(t) * (t - mean) * f(t), 0.0, 1.0, scheme)
    denominator = integrate(lambda t: density.pdf(t) * (t - mean) ** 2, 0.0, 1.0, scheme)
    return numerator / denominator


def contrast_variance(c: Contrast, sigma: EffectCovariance | ArrayLike) -> float:
    """c^T Sigma c, clamped at 0 after a round-off check."""
    matrix = _matrix(sigma)
    v = c.as_array()
    if matrix.shape != (v.size, v.size):
        raise InvalidArgumentError(
            f"covariance of shape {matrix.shape} does not match a contrast of length {v.size}"
        )
    variance = float(v @ matrix @ v)
    if variance < -VARIANCE_TOL:
        logger.error("Contrast variance %.3e is negative", variance)
        raise ModelError(f"covariance is not positive semidefinite, contrast variance {variance:.3e}")
    return max(variance, 0.0)


def delta_ppr_estimate(b: EstimateBundle, c: Contrast, estimand_id: str = "custom") -> PprResult:
    """Point sum v_i delta_hat_i with variance sum sum v_i v_j sigma_ij."""
    if not c.grid.matches(b.grid):
        logger.error("Contrast grid %s does not match bundle grid %s", c.grid, b.grid)
        raise InvalidArgumentError("contrast grid does not match the estimate bundle grid")
    point = c.apply(b.delta_array())
    return PprResult.from_point_variance(estimand_id, point, contrast_variance(c, b.sigma_hat))


def delta_ppr_smart(b: EstimateBundle, c: Contrast, estimand_id: str = "custom") -> PprResult:
    """
    Estimate with the baseline coefficient replaced by -sum_{i>=2} v_i sigma_i1 / sigma_11.
    The variance is sum sum v_i v_j (sigma_ij - sigma_i1 sigma_j1 / sigma_11) over i, j >= 2.
    """
    if not c.grid.matches(b.grid):
        raise InvalidArgumentError("contrast grid does not match the estimate bundle grid")
    return delta_ppr_estimate(b, smart_first_coefficient(c, b.sigma_hat), estimand_id)


def optimal_snr(delta: ArrayLike, sigma: EffectCovariance | ArrayLike) -> float:
    """Delta^T Sigma^-1 Delta, the largest SNR any linear contrast can reach."""
    delta = np.asarray(delta, dtype=float)
    return float(delta @ spd_solve(_matrix(sigma), delta))


def cs_variance_ratio(m: int) -> float:
    """Var(OLS) / Var(CFB) under compound symmetry on m equal-spaced visits: 6(m-1)/(m(m+1))."""
    if m < 2:
        raise InvalidArgumentError(f"variance ratio needs m >= 2, got {m}")
    return 6 * (m - 1) / (m * (m + 1))


def relative_metrics(
    candidate: PprResult,
    candidate_signal: float,
    reference: PprResult,
    reference_signal: float,
) -> RelativeMetrics:
    """
    Signal, standard error and inverse-SNR sample size of a candidate, as percentages of
    a reference estimand.
    :raises InvalidArgumentError: If the reference signal is 0 or its variance is not positive.
    """
    if reference_signal == 0:
        raise InvalidArgumentError("reference signal must be nonzero")
    if not reference.variance > 0:
        raise InvalidArgumentError("reference variance must be positive")
    signal_pct = 100 * abs(candidate_signal / reference_signal)
    se_pct = 100 * math.sqrt(candidate.variance / reference.variance)
    if candidate_signal == 0:
        logger.debug("Candidate %s has zero signal, sample size undefined", candidate.estimand_id)
        rel = None
    else:
        # ratio first so identical estimands give exactly 100
        rel = 100 * (
            (candidate.variance / candidate_signal**2) / (reference.variance / reference_signal**2)
        )
    return RelativeMetrics(signal_pct=signal_pct, se_pct=se_pct, rel_sample_size_pct=rel)


def ppr_ratio(treated: float, control: float) -> float:
    """R_w = r_w(h) / r_w(f); equals the common rate ratio for any weight when h' is proportional to f'."""
    if not control > 0:
        logger.error("Control PPR %s is not positive", control)
        raise InvalidArgumentError(f"control PPR must be positive, got {control}")
    return treated / control


def covariance_decomposition_check(
    s: ScenarioId, spec: WeightSpec, nodes: int | None = None
) -> DecompositionCheck:
    """
    Both sides of int w Delta' = Cov[w(T), Delta'(T)] + Delta(1) with T uniform on [0, 1].
    The covariance is integrated directly from centred functions.
    """
    nodes = _check_nodes(nodes)
    scheme = gauss_legendre(nodes)
    effect = effect_trajectory(s)
    lhs = continuous_ppr(effect, spec, nodes)
    w_mean = integrate_piecewise(spec.value, 0.0, 1.0, scheme, spec.breakpoints)
    rate_mean = integrate(effect.derivative, 0.0, 1.0, scheme)
    cov = integrate_piecewise(
        lambda t: (spec.value(t) - w_mean) * (effect.derivative(t) - rate_mean),
        0.0,
        1.0,
        scheme,
        spec.breakpoints,
    )
    return DecompositionCheck(lhs=lhs, rhs=cov + float(effect_cumulative(s, 1.0)))


def ols_consistency_margin(s: ScenarioId, nodes: int | None = None) -> float:
    """int (t - 0.5) Delta(t) dt; the OLS PPR difference has the same sign."""
    nodes = _check_nodes(nodes)
    effect = effect_trajectory(s)
    return integrate(lambda t: (t - 0.5) * effect(t), 0.0, 1.0, gauss_legendre(nodes))


