from typing import Union

import numpy as np
from scipy.special import kv, gammaln

from ..exceptions import InvalidArgumentError

ArrayLike = Union[float, np.ndarray]


def bessel_k(nu: float, x: ArrayLike) -> ArrayLike:
    """Modified Bessel function of the second kind K_nu(x) for x > 0."""
    if np.any(np.asarray(x) <= 0):
        raise InvalidArgumentError("bessel_k requires x > 0")
    return kv(nu, x)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    if d < 1:
        raise InvalidArgumentError(f"sphere_area requires d >= 1, got d={d}")
    return float(np.exp(np.log(2.0) + 0.5 * d * np.log(np.pi) - gammaln(0.5 * d)))
