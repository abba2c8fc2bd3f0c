import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky

from src.util.errors import InvalidArgumentError, ModelError
from src.util.logging import logger


def _failing_minor(matrix: np.ndarray) -> int:
    """1-based order of the first leading principal minor that is not positive definite."""
    for k in range(1, matrix.shape[0] + 1):
        if np.linalg.eigvalsh(matrix[:k, :k]).min() <= 0:
            return k
    return matrix.shape[0]


def cholesky_factor(matrix: ArrayLike) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive definite matrix.
    :raises ModelError: Carrying the order of the offending leading minor.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ModelError("matrix has non-finite entries")
    try:
        return cholesky(matrix, lower=True)
    except LinAlgError as e:
        minor = _failing_minor(matrix)
        logger.error("Matrix is not positive definite, leading minor %d fails: %s", minor, e)
        raise ModelError(
            f"matrix is not positive definite (leading minor of order {minor})", minor=minor
        ) from e


def spd_solve(matrix: ArrayLike, rhs: ArrayLike) -> np.ndarray:
    """Solve A x = rhs for symmetric positive definite A by Cholesky factor-and-solve."""
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != matrix.shape[0]:
        raise InvalidArgumentError(
            f"right-hand side of length {rhs.shape[0]} does not match a {matrix.shape[0]}x{matrix.shape[0]} matrix"
        )
    try:
        factor = cho_factor(matrix, lower=True)
    except LinAlgError as e:
        minor = _failing_minor(matrix)
        logger.error("Cannot solve, leading minor %d is not positive definite", minor)
        raise ModelError(
            f"matrix is not positive definite (leading minor of order {minor})", minor=minor
        ) from e
    return cho_solve(factor, rhs)
