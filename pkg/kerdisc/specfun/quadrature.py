from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from ..config import logger
from ..exceptions import InvalidArgumentError
from .schemas import QuadratureRule

MAX_KNOTS = 256


def _orthonormal_hermite_sq_sum(x: np.ndarray, u: int) -> np.ndarray:
    """sum_{j<u} p_j(x)^2 for the orthonormal probabilists' Hermite polynomials."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    total = p * p
    for j in range(1, u):
        p_prev, p = p, (x * p - np.sqrt(j - 1.0) * p_prev) / np.sqrt(j)
        total += p * p
    return total


@lru_cache(maxsize=64)
def gauss_hermite(u: int) -> QuadratureRule:
    """u-point Gauss-Hermite rule for E[f(w)], w ~ N(0, 1), built by Golub-Welsch."""
    if u < 1 or u > MAX_KNOTS:
        raise InvalidArgumentError(f"gauss_hermite needs 1 <= u <= {MAX_KNOTS}, got u={u}")
    if u == 1:
        return QuadratureRule(knots=[0.0], weights=[1.0])

    knots = eigvalsh_tridiagonal(np.zeros(u), np.sqrt(np.arange(1.0, u)))
    knots = 0.5 * (knots - knots[::-1])
    weights = 1.0 / _orthonormal_hermite_sq_sum(knots, u)
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()
    logger.debug(f"Built Gauss-Hermite rule with u={u}, max knot {knots[-1]:.6f}")
    return QuadratureRule(knots=knots, weights=weights)
