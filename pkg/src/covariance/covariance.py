import numpy as np

from src.covariance.linalg import cholesky_factor, spd_solve
from src.model.covariance import (
    ArWithK,
    CompoundSymmetric,
    CovarianceSpec,
    EffectCovariance,
    ExponentialDecay,
    SdProfile,
    Unstructured,
)
from src.model.grid import TimeGrid
from src.util.errors import InvalidArgumentError
from src.util.logging import logger

__all__ = ["sd_profile", "correlation_matrix", "effect_covariance", "spd_solve"]


def _check_dimension(spec: Unstructured, grid: TimeGrid) -> np.ndarray:
    a = spec.as_array()
    if a.shape[0] != grid.m:
        logger.error("Covariance matrix is %dx%d but the grid has %d points", *a.shape, grid.m)
        raise InvalidArgumentError(
            f"covariance matrix is {a.shape[0]}x{a.shape[1]} but the grid has {grid.m} points"
        )
    return a


def sd_profile(spec: CovarianceSpec, grid: TimeGrid) -> np.ndarray:
    """
    Visit-level standard deviations. ArWithK pins sigma_1 = 1 and sigma_m = sigma_end,
    either linearly in the visit index or linearly in time.
    """
    match spec:
        case ArWithK(sd_profile=SdProfile.INDEX_LINEAR):
            i = np.arange(grid.m)
            return 1 + (spec.sigma_end - 1) * i / (grid.m - 1)
        case ArWithK(sd_profile=SdProfile.TIME_LINEAR):
            return 1 + (spec.sigma_end - 1) * grid.as_array()
        case CompoundSymmetric() | ExponentialDecay():
            return np.full(grid.m, spec.sd)
        case Unstructured():
            return np.sqrt(np.diag(_check_dimension(spec, grid)))
    raise InvalidArgumentError(f"unsupported covariance spec {spec!r}")


def _validated(matrix: np.ndarray, spec: CovarianceSpec) -> np.ndarray:
    cholesky_factor(matrix)
    logger.debug("Built %s correlation of order %d", spec.kind, matrix.shape[0])
    return matrix


def correlation_matrix(spec: CovarianceSpec, grid: TimeGrid) -> np.ndarray:
    """
    Correlations between visit-level effect estimates.
    :raises ModelError: If the result is not positive definite, with the failing minor.
    """
    t = grid.as_array()
    lag = np.abs(t[:, None] - t[None, :])
    match spec:
        case ArWithK() if spec.k == spec.rho:
            r = np.full((grid.m, grid.m), spec.rho)
        case ArWithK():
            # k (rho/k)^lag written so that lag 1 gives rho exactly
            r = spec.k ** (1 - lag) * spec.rho**lag
        case CompoundSymmetric():
            r = np.full((grid.m, grid.m), spec.corr)
        case ExponentialDecay():
            r = spec.base**lag
        case Unstructured():
            a = _check_dimension(spec, grid)
            sd = np.sqrt(np.diag(a))
            r = a / np.outer(sd, sd)
        case _:
            raise InvalidArgumentError(f"unsupported covariance spec {spec!r}")
    np.fill_diagonal(r, 1.0)
    return _validated(r, spec)


def effect_covariance(spec: CovarianceSpec, grid: TimeGrid) -> EffectCovariance:
    """matrix[i][j] = sigma_i sigma_j rho_ij."""
    if isinstance(spec, Unstructured):
        return EffectCovariance.from_array(grid, _check_dimension(spec, grid))
    sd = sd_profile(spec, grid)
    matrix = np.outer(sd, sd) * correlation_matrix(spec, grid)
    return EffectCovariance.from_array(grid, matrix)
