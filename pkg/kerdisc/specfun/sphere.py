from typing import Union

import numpy as np
from scipy.special import gammaln

from ..exceptions import InvalidArgumentError
from .bessel import sphere_area
from .kummer import kummer_m

ArrayLike = Union[float, np.ndarray]


def _check_dim(d: int) -> None:
    if d < 2:
        raise InvalidArgumentError(f"sphere integrals need d >= 2, got d={d}")


def j1(c: ArrayLike, d: int) -> ArrayLike:
    """Integral of exp(-c * theta_1^2) over S^{d-1}."""
    _check_dim(d)
    area = sphere_area(d)
    return area * kummer_m(0.5, 0.5 * d, -np.asarray(c, dtype=np.float64) if np.ndim(c) else -float(c))


def j2(c: ArrayLike, d: int) -> ArrayLike:
    """Integral of theta_1^2 * exp(-c * theta_1^2) over S^{d-1}."""
    _check_dim(d)
    prefactor = np.exp(0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0))
    return prefactor * kummer_m(1.5, 0.5 * d + 1.0, -np.asarray(c, dtype=np.float64) if np.ndim(c) else -float(c))


def orthogonal_integral(c: float, d: int, u: np.ndarray, v: np.ndarray) -> float:
    """Integral of (theta.u)(theta.v) exp(-c theta_1^2) over S^{d-1} for u, v orthogonal to e_1."""
    _check_dim(d)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if abs(u[0]) > 1e-12 or abs(v[0]) > 1e-12:
        raise InvalidArgumentError("orthogonal_integral needs u and v orthogonal to e_1")
    return float(u @ v) * (j1(c, d) - j2(c, d)) / (d - 1)
