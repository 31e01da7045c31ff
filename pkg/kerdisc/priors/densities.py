from typing import NamedTuple, Union

import numpy as np
from scipy.special import gammaln, kv

from ..config import logger
from ..exceptions import InvalidArgumentError, UnsupportedOperationError
from .schemas import GaussianPrior, LaplacePrior, StudentTPrior, UniformSpherePrior

Prior = Union[GaussianPrior, LaplacePrior, StudentTPrior, UniformSpherePrior]


class ScoreResult(NamedTuple):
    values: np.ndarray
    degenerate: bool


def _as_points(p: Prior, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != p.d:
        raise InvalidArgumentError(f"{p.kind} prior has d={p.d}, got points of dimension {x.shape[-1]}")
    return x


def score(p: Prior, x) -> ScoreResult:
    """grad log p at a point (shape (d,)) or at every row of a batch (shape (n, d))."""
    x = _as_points(p, x)
    if isinstance(p, GaussianPrior):
        return ScoreResult(-x / p.sigma**2, False)
    if isinstance(p, LaplacePrior):
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        origin = norms == 0.0
        values = -np.divide(x, p.sigma * norms, out=np.zeros_like(x), where=~origin)
        if origin.any():
            logger.warning(f"Laplace score evaluated at the origin for {int(origin.sum())} point(s); using zero subgradient")
        return ScoreResult(values, bool(origin.any()))
    if isinstance(p, StudentTPrior):
        q = p.nu * p.sigma**2 + np.sum(x * x, axis=-1, keepdims=True)
        return ScoreResult(-(p.nu + p.d) * x / q, False)
    return ScoreResult(np.zeros_like(x), False)


def score_hvp(p: Prior, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise product of the Hessian of log p at x with v."""
    x = _as_points(p, x)
    v = np.asarray(v, dtype=np.float64)
    if isinstance(p, GaussianPrior):
        return -v / p.sigma**2
    if isinstance(p, LaplacePrior):
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        safe = np.where(norms == 0.0, 1.0, norms)
        unit = x / safe
        out = -(v - unit * np.sum(unit * v, axis=-1, keepdims=True)) / (p.sigma * safe)
        return np.where(norms == 0.0, 0.0, out)
    if isinstance(p, StudentTPrior):
        q = p.nu * p.sigma**2 + np.sum(x * x, axis=-1, keepdims=True)
        xv = np.sum(x * v, axis=-1, keepdims=True)
        return -(p.nu + p.d) * (v / q - 2.0 * x * xv / q**2)
    return np.zeros_like(v)


def log_density(p: Prior, x) -> Union[float, np.ndarray]:
    x = _as_points(p, x)
    sq = np.sum(x * x, axis=-1)
    d = p.d
    if isinstance(p, GaussianPrior):
        out = -0.5 * d * np.log(2.0 * np.pi * p.sigma**2) - 0.5 * sq / p.sigma**2
    elif isinstance(p, LaplacePrior):
        log_norm = gammaln(0.5 * d) - np.log(2.0) - 0.5 * d * np.log(np.pi) - d * np.log(p.sigma) - gammaln(d)
        out = log_norm - np.sqrt(sq) / p.sigma
    elif isinstance(p, StudentTPrior):
        log_norm = (
            gammaln(0.5 * (p.nu + d)) - gammaln(0.5 * p.nu) - 0.5 * d * np.log(p.nu * np.pi) - d * np.log(p.sigma)
        )
        out = log_norm - 0.5 * (p.nu + d) * np.log1p(sq / (p.nu * p.sigma**2))
    else:
        raise UnsupportedOperationError("The uniform sphere prior has no density on R^d")
    return float(out) if np.ndim(out) == 0 else out


def student_t_cf(nu: float, sigma: float, radius: np.ndarray) -> np.ndarray:
    """CF of the isotropic Student-t at |omega| = radius."""
    radius = np.asarray(radius, dtype=np.float64)
    z = np.sqrt(nu) * sigma * radius
    out = np.ones_like(z)
    nz = z > 0
    half = 0.5 * nu
    out[nz] = np.exp(half * np.log(z[nz]) - gammaln(half) - (half - 1.0) * np.log(2.0)) * kv(half, z[nz])
    return out


def cf_full(p: Prior, omega) -> Union[float, np.ndarray]:
    """Characteristic function at a frequency vector (shape (d,)) or at rows of a matrix."""
    if isinstance(p, UniformSpherePrior):
        raise UnsupportedOperationError("cf_full is not defined for the uniform sphere prior")
    omega = _as_points(p, omega)
    sq = np.sum(omega * omega, axis=-1)
    if isinstance(p, GaussianPrior):
        out = np.exp(-0.5 * p.sigma**2 * sq)
    elif isinstance(p, LaplacePrior):
        out = (1.0 + p.sigma**2 * sq) ** (-0.5 * (p.d + 1))
    else:
        out = student_t_cf(p.nu, p.sigma, np.sqrt(sq))
    return float(out) if np.ndim(out) == 0 else out


def cf_slice(p: Prior, omega, projected: bool = False) -> Union[float, np.ndarray]:
    """One-dimensional target CF used per slice.

    Laplace defaults to 1 / (1 + sigma^2 w^2); ``projected=True`` gives the CF of an actual
    one-dimensional projection of the d-dimensional Laplace, (1 + sigma^2 w^2)^{-(d+1)/2}.
    """
    w = np.asarray(omega, dtype=np.float64)
    if isinstance(p, GaussianPrior):
        out = np.exp(-0.5 * p.sigma**2 * w**2)
    elif isinstance(p, LaplacePrior):
        power = 0.5 * (p.d + 1) if projected else 1.0
        out = (1.0 + p.sigma**2 * w**2) ** (-power)
    else:
        raise UnsupportedOperationError(f"No per-slice CF for the {p.kind} prior")
    return float(out) if np.ndim(out) == 0 else out


SCORE_1D_TAGS = ("gaussian", "laplace", "student-t")


def score_1d(tag: str, u: np.ndarray, sigma: float, nu: float = 5.0) -> np.ndarray:
    """Score of a one-dimensional target evaluated at projected values u."""
    if tag == "gaussian":
        return -u / sigma**2
    if tag == "laplace":
        return -np.sign(u) / sigma
    if tag == "student-t":
        return -(nu + 1.0) * u / (nu * sigma**2 + u * u)
    raise UnsupportedOperationError(f"No one-dimensional score for '{tag}'")
