from collections.abc import Callable, Sequence
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import erfc

from src.model.quadrature import QuadratureScheme
from src.util.errors import ConvergenceError, IntegrationDomainError, InvalidArgumentError
from src.util.logging import logger

MAX_ORDER = 64
MAX_NEWTON_ITERATIONS = 100
RESIDUAL_TOL = 1e-14
STEP_TOL = 1e-15


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x**2 - 1)
    return p, dp


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureScheme:
    """
    Gauss-Legendre nodes and weights of order n on (-1, 1).
    Roots of P_n are found by Newton iteration from Chebyshev initial guesses;
    weights are a_i = 2 / ((1 - x_i^2) P_n'(x_i)^2).
    :param n: Number of nodes, 1 <= n <= 64.
    :return: The scheme, nodes ascending.
    :raises ConvergenceError: If Newton iteration does not settle in 100 steps.
    """
    if not 1 <= n <= MAX_ORDER:
        logger.error("Gauss-Legendre order %s outside [1, %d]", n, MAX_ORDER)
        raise InvalidArgumentError(f"Gauss-Legendre order must be in [1, {MAX_ORDER}], got {n}")

    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for iteration in range(MAX_NEWTON_ITERATIONS):
        p, dp = _legendre(n, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) <= STEP_TOL or np.max(np.abs(p)) < RESIDUAL_TOL:
            break
    else:
        logger.error("Newton iteration for P_%d did not converge", n)
        raise ConvergenceError(
            f"Legendre root finding for n={n} did not converge in {MAX_NEWTON_ITERATIONS} iterations"
        )
    logger.debug("Gauss-Legendre order %d converged after %d iterations", n, iteration + 1)

    _, dp = _legendre(n, x)
    a = 2.0 / ((1 - x**2) * dp**2)

    order = np.argsort(x)
    x, a = x[order], a[order]
    # enforce exact mirror symmetry of the rule
    x = 0.5 * (x - x[::-1])
    a = 0.5 * (a + a[::-1])
    return QuadratureScheme(nodes=tuple(x.tolist()), weights=tuple(a.tolist()))


def _evaluate(fn: Callable, t: np.ndarray) -> np.ndarray:
    values = np.asarray(fn(t), dtype=float)
    if values.shape != t.shape:
        values = np.array([float(fn(ti)) for ti in t])
    return values


def integrate(
    fn: Callable[[ArrayLike], ArrayLike], a: float, b: float, scheme: QuadratureScheme
) -> float:
    """
    Affine-mapped Gauss-Legendre sum for the integral of fn over [a, b].
    :raises IntegrationDomainError: If fn is not finite at a node.
    """
    if not a < b:
        raise InvalidArgumentError(f"integration needs a < b, got [{a}, {b}]")
    half = 0.5 * (b - a)
    t = half * scheme.node_array() + 0.5 * (a + b)
    values = _evaluate(fn, t)
    if not np.all(np.isfinite(values)):
        logger.error("Integrand is not finite on [%s, %s]", a, b)
        raise IntegrationDomainError(f"integrand is not finite on [{a}, {b}]")
    return float(half * np.dot(scheme.weight_array(), values))


def integrate_piecewise(
    fn: Callable[[ArrayLike], ArrayLike],
    a: float,
    b: float,
    scheme: QuadratureScheme,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate on each piece between interior breakpoints, for integrands with kinks."""
    edges = [a, *sorted(p for p in breakpoints if a < p < b), b]
    return sum(integrate(fn, lo, hi, scheme) for lo, hi in zip(edges, edges[1:]))


def normal_cdf(x: ArrayLike) -> np.ndarray | float:
    """Standard normal CDF through the complementary error function."""
    result = 0.5 * erfc(-np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result
