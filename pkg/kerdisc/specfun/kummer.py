from typing import Union

import numpy as np
from scipy.special import gammaln, gammasgn

from ..config import logger
from ..exceptions import InvalidArgumentError, NumericalError
from .schemas import KummerMode

ArrayLike = Union[float, np.ndarray]

KUMMER_SERIES_RTOL = 1e-17
KUMMER_ASYMPTOTIC_FACTOR = 700.0
KUMMER_MAX_TERMS = 1_000_000

_RESCALE = 1e-280
_LOG_RESCALE = -np.log(_RESCALE)


def _scaled_series(c: float, b: float, x: np.ndarray) -> np.ndarray:
    """e^{-x} * M(c; b; x) for x >= 0, summed with periodic rescaling of the partial sums."""
    total = np.ones_like(x)
    term = np.ones_like(x)
    scale = np.zeros_like(x)
    active = np.arange(x.size)
    k = 0
    while active.size:
        k += 1
        xa = x[active]
        term[active] *= (c + k - 1.0) / (b + k - 1.0) * xa / k
        total[active] += term[active]

        large = np.abs(total[active]) > 1e280
        if large.any():
            idx = active[large]
            total[idx] *= _RESCALE
            term[idx] *= _RESCALE
            scale[idx] += 1.0

        done = (k > xa) & (np.abs(term[active]) <= KUMMER_SERIES_RTOL * np.abs(total[active]))
        active = active[~done]
        if k > KUMMER_MAX_TERMS:
            raise NumericalError(f"Kummer series did not converge for c={c}, b={b} after {k} terms")
    return total * np.exp(scale * _LOG_RESCALE - x)


def _asymptotic(a: float, b: float, x: np.ndarray) -> np.ndarray:
    """Large-x expansion of M(a; b; -x), truncated at its smallest term."""
    prefactor = gammasgn(b) * gammasgn(b - a) * np.exp(gammaln(b) - gammaln(b - a) - a * np.log(x))
    total = np.ones_like(x)
    term = np.ones_like(x)
    live = np.ones(x.shape, dtype=bool)
    for s in range(1, 200):
        nxt = term * (a + s - 1.0) * (a - b + s) / (s * x)
        live &= np.abs(nxt) < np.abs(term)
        if not live.any():
            break
        term = np.where(live, nxt, term)
        total = np.where(live, total + nxt, total)
        live &= np.abs(nxt) > KUMMER_SERIES_RTOL * np.abs(total)
    return prefactor * total


def kummer_m(a: float, b: float, z: ArrayLike) -> ArrayLike:
    """Confluent hypergeometric M(a; b; z) for z <= 0."""
    if b <= 0:
        raise InvalidArgumentError(f"kummer_m requires b > 0, got b={b}")
    scalar = np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(z_arr > 0) or not np.all(np.isfinite(z_arr)):
        raise InvalidArgumentError("kummer_m is only supported for finite z <= 0")

    if a == b:
        out = np.exp(z_arr)
    elif a == 0:
        out = np.ones_like(z_arr)
    else:
        x = -z_arr.reshape(-1)
        out = np.empty_like(x)
        far = x > KUMMER_ASYMPTOTIC_FACTOR * b
        if far.any():
            out[far] = _asymptotic(a, b, x[far])
        if (~far).any():
            out[~far] = _scaled_series(b - a, b, x[~far])
        out = out.reshape(z_arr.shape)
        out[z_arr == 0] = 1.0

    if not np.all(np.isfinite(out)):
        logger.error(f"Non-finite Kummer value for a={a}, b={b}")
        raise NumericalError(f"kummer_m({a}, {b}, z) produced a non-finite value")
    return float(out[0]) if scalar else out


def kummer_m_prime(a: float, b: float, z: ArrayLike) -> ArrayLike:
    """dM/dz = (a/b) M(a+1; b+1; z)."""
    return (a / b) * kummer_m(a + 1.0, b + 1.0, z)


def kummer_surrogate(a: float, b: float, c: ArrayLike) -> ArrayLike:
    """Large-b surrogate (1 + c/(b - (a+1)/2))^{-a} for M(a; b; -c)."""
    shift = b - 0.5 * (a + 1.0)
    if shift <= 0:
        raise InvalidArgumentError(f"surrogate undefined for a={a}, b={b}")
    return (1.0 + np.asarray(c, dtype=np.float64) / shift) ** (-a)


def kummer_half_d(c: ArrayLike, d: int, mode: KummerMode = KummerMode.EXACT) -> ArrayLike:
    """M(1/2; d/2; -c), or its inverse multiquadric limit (1 + 4c/(2d-3))^{-1/2}."""
    if d < 1:
        raise InvalidArgumentError(f"kummer_half_d requires d >= 1, got d={d}")
    if np.any(np.asarray(c) < 0):
        raise InvalidArgumentError("kummer_half_d requires c >= 0")
    mode = KummerMode(mode)
    if mode is KummerMode.IMQ_APPROX:
        if d < 4:
            raise InvalidArgumentError(f"ImqApprox needs d >= 4, got d={d}")
        out = kummer_surrogate(0.5, 0.5 * d, c)
        return float(out) if np.ndim(c) == 0 else out
    return kummer_m(0.5, 0.5 * d, -np.asarray(c, dtype=np.float64) if np.ndim(c) else -float(c))
