from typing import Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics import pairwise_distances

from ..config import logger, SPHERE_NORM_ATOL
from ..exceptions import InvalidArgumentError, UnsupportedOperationError
from ..specfun.kummer import kummer_m
from ..specfun.schemas import KummerMode
from .schemas import GaussianKernel, ImqKernel, KummerKernel, VmfKernel, KernelSpec

ArrayLike = Union[float, np.ndarray]


def _imq_profile(alpha: float, beta: float, q: np.ndarray, order: int) -> Tuple[np.ndarray, ...]:
    base = 1.0 + alpha * q
    out = [base ** (-beta)]
    coef = 1.0
    for k in range(1, order + 1):
        coef *= -alpha * (beta + k - 1.0)
        out.append(coef * base ** (-beta - k))
    return tuple(out)


def kernel_profile(k: KernelSpec, q: ArrayLike, order: int = 2) -> Tuple[np.ndarray, ...]:
    """Radial profile phi(q), q = |x - y|^2, followed by its first ``order`` derivatives in q."""
    q = np.asarray(q, dtype=np.float64)
    if isinstance(k, GaussianKernel):
        phi = np.exp(-k.gamma * q)
        return tuple((-k.gamma) ** j * phi for j in range(order + 1))
    if isinstance(k, ImqKernel):
        return _imq_profile(k.alpha, k.beta, q, order)
    if isinstance(k, KummerKernel):
        if k.mode is KummerMode.IMQ_APPROX:
            return _imq_profile(4.0 * k.gamma / (2.0 * k.d - 3.0), 0.5, q, order)
        a, b = 0.5, 0.5 * k.d
        out = []
        coef = 1.0
        for j in range(order + 1):
            if j:
                coef *= -k.gamma * (a + j - 1.0) / (b + j - 1.0)
            out.append(coef * kummer_m(a + j, b + j, -k.gamma * q))
        return tuple(out)
    raise UnsupportedOperationError(f"{k.kind} kernel has no radial profile")


def _as_pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError(f"kernel arguments must be points of equal dimension, got {x.shape} and {y.shape}")
    return x, y


def _check_on_sphere(*points: np.ndarray) -> None:
    for p in points:
        norms = np.linalg.norm(np.atleast_2d(p), axis=-1)
        if np.any(np.abs(norms - 1.0) > SPHERE_NORM_ATOL):
            raise InvalidArgumentError("vMF kernel evaluated off the unit sphere")


def kernel_eval(k: KernelSpec, x, y) -> float:
    x, y = _as_pair(x, y)
    if isinstance(k, VmfKernel):
        _check_on_sphere(x, y)
        return float(np.exp(k.kappa * (x @ y)))
    if isinstance(k, KummerKernel) and x.size != k.d:
        raise InvalidArgumentError(f"Kummer kernel built for d={k.d}, got points of dimension {x.size}")
    q = float(np.sum((x - y) ** 2))
    return float(kernel_profile(k, q, order=0)[0])


def _require_basic(k: KernelSpec, operation: str) -> None:
    if not isinstance(k, (GaussianKernel, ImqKernel)):
        raise UnsupportedOperationError(f"{operation} is not available for the {k.kind} kernel")


def kernel_grad_x(k: KernelSpec, x, y) -> np.ndarray:
    _require_basic(k, "kernel_grad_x")
    x, y = _as_pair(x, y)
    delta = x - y
    _, d1 = kernel_profile(k, float(delta @ delta), order=1)
    return 2.0 * float(d1) * delta


def kernel_trace_hessian(k: KernelSpec, x, y) -> float:
    """tr(grad_x grad_y^T k(x, y)) for the Gaussian and IMQ kernels."""
    _require_basic(k, "kernel_trace_hessian")
    x, y = _as_pair(x, y)
    q = float(np.sum((x - y) ** 2))
    _, d1, d2 = kernel_profile(k, q, order=2)
    return float(-2.0 * x.size * d1 - 4.0 * d2 * q)


def gram_matrix(k: KernelSpec, X: np.ndarray, Y: np.ndarray = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise InvalidArgumentError(f"gram_matrix dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if isinstance(k, VmfKernel):
        _check_on_sphere(X, Y)
        return np.exp(k.kappa * (X @ Y.T))
    if isinstance(k, KummerKernel) and X.shape[1] != k.d:
        raise InvalidArgumentError(f"Kummer kernel built for d={k.d}, got dimension {X.shape[1]}")
    return kernel_profile(k, cdist(X, Y, "sqeuclidean"), order=0)[0]


def median_heuristic_gamma(X: np.ndarray) -> float:
    """Bandwidth 1 / median squared pairwise distance. A convenience utility, not used by any estimator."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        raise InvalidArgumentError("median heuristic needs at least two points")
    dist = pairwise_distances(X, metric="euclidean")
    sq = dist[np.triu_indices(X.shape[0], k=1)] ** 2
    median = float(np.median(sq))
    if median <= 0:
        raise InvalidArgumentError("median squared distance is zero")
    logger.info(f"Median heuristic gamma={1.0 / median:.6g} from n={X.shape[0]} points")
    return 1.0 / median
