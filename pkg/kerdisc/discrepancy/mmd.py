import time
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from ..config import logger
from ..core.schemas import SampleBatch, DiscrepancyEstimate
from ..exceptions import InvalidArgumentError, NumericalError, UnsupportedOperationError
from ..kernels.base import gram_matrix, kernel_profile
from ..kernels.schemas import GaussianKernel, KernelSpec, KummerKernel
from ..priors.densities import cf_slice
from ..specfun.kummer import kummer_half_d
from ..specfun.schemas import KummerMode, QuadratureRule
from .pairwise import pair_row_sums, row_blocks, zero_block_diagonal
from .schemas import MmdEstimatorSpec, MmdForm
from .utils import build_estimate, check_form, first_order_se


def _require_pairs(X: SampleBatch, form: str, name: str) -> None:
    if form == "U" and X.n < 2:
        raise InvalidArgumentError(f"{name} U-statistic needs n >= 2, got n={X.n}")


def mmd_two_sample_u(k: KernelSpec, X: SampleBatch, Y: SampleBatch, form: str = "U") -> DiscrepancyEstimate:
    """Unbiased three-term MMD^2 between two samples (diagonal-inclusive with form='V')."""
    started = time.perf_counter()
    check_form(form)
    if X.d != Y.d:
        raise InvalidArgumentError(f"two-sample MMD dimension mismatch: {X.d} vs {Y.d}")
    _require_pairs(X, form, "mmd_two_sample_u")
    _require_pairs(Y, form, "mmd_two_sample_u")
    exclude = form == "U"
    n, m = X.n, Y.n
    logger.info(f"Computing two-sample MMD for n={n}, m={m}, d={X.d}, kernel={k.kind}")

    rows_xx = pair_row_sums(lambda s, e: gram_matrix(k, X.data[s:e], X.data), n, exclude)
    rows_yy = pair_row_sums(lambda s, e: gram_matrix(k, Y.data[s:e], Y.data), m, exclude)
    rows_xy = np.empty(n)
    cols_xy = np.zeros(m)
    for s, e in row_blocks(n):
        block = gram_matrix(k, X.data[s:e], Y.data)
        rows_xy[s:e] = block.sum(axis=1)
        cols_xy += block.sum(axis=0)

    px = n * (n - 1) if exclude else n * n
    py = m * (m - 1) if exclude else m * m
    value = rows_xx.sum() / px + rows_yy.sum() / py - 2.0 * rows_xy.sum() / (n * m)

    hx = rows_xx / (px / n) - rows_xy / m
    hy = rows_yy / (py / m) - cols_xy / n
    se = float(np.sqrt((first_order_se(hx) ** 2 if n > 1 else 0.0) + (first_order_se(hy) ** 2 if m > 1 else 0.0)))
    return build_estimate(value, "mmd-u", n + m, X.d, started, std_error=se, form=form)


def mmd_cf_quadrature_1d(
    gamma: float,
    X1: SampleBatch,
    p,
    rule: QuadratureRule,
    cosine_only: bool = False,
    projected: bool = False,
) -> DiscrepancyEstimate:
    """Gaussian-kernel MMD^2 to a one-dimensional target through squared CF errors at quadrature knots."""
    started = time.perf_counter()
    if X1.d != 1:
        raise InvalidArgumentError(f"mmd_cf_quadrature_1d needs one-dimensional samples, got d={X1.d}")
    omega = rule.frequencies(gamma)
    args = X1.data[:, :1] * omega[None, :]
    cos, sin = np.cos(args), np.sin(args)
    emp_cos = cos.mean(axis=0)
    emp_sin = sin.mean(axis=0)
    target = cf_slice(p, omega, projected=projected)

    err = (emp_cos - target) ** 2
    influence = (cos - emp_cos) * (emp_cos - target)
    if not cosine_only:
        err = err + emp_sin**2
        influence = influence + (sin - emp_sin) * emp_sin
    value = float(err @ rule.weights)
    se = first_order_se(influence @ rule.weights)
    return build_estimate(value, "mmd-cf", X1.n, 1, started, std_error=se, form="V", knots=rule.size)


def _bhep_terms(gamma: float, sigma: float, d: int):
    spread = 1.0 + 2.0 * gamma * sigma**2
    return spread ** (-0.5 * d), gamma / spread, (1.0 + 4.0 * gamma * sigma**2) ** (-0.5 * d)


def mmd_gaussian_closed_form(gamma: float, sigma: float, X: SampleBatch, form: str = "U") -> DiscrepancyEstimate:
    """BHEP statistic: Gaussian-kernel MMD^2 to N(0, sigma^2 I) with prior expectations in closed form."""
    started = time.perf_counter()
    check_form(form)
    _require_pairs(X, form, "mmd_gaussian_closed_form")
    n, d = X.n, X.d
    exclude = form == "U"
    k = GaussianKernel(gamma=gamma)
    cross_scale, cross_gamma, const = _bhep_terms(gamma, sigma, d)

    rows = pair_row_sums(lambda s, e: gram_matrix(k, X.data[s:e], X.data), n, exclude)
    cross = cross_scale * np.exp(-cross_gamma * np.sum(X.data**2, axis=1))
    pairs = n * (n - 1) if exclude else n * n
    value = rows.sum() / pairs - 2.0 * cross.mean() + const
    se = first_order_se(rows / (pairs / n) - cross)
    return build_estimate(value, "bhep", n, d, started, std_error=se, form=form)


def bhep_gradient(gamma: float, sigma: float, X: np.ndarray, form: str = "V") -> np.ndarray:
    n, d = X.shape
    cross_scale, cross_gamma, _ = _bhep_terms(gamma, sigma, d)
    pairs = n * (n - 1) if form == "U" else n * n
    grad = np.empty_like(X)
    for s, e in row_blocks(n):
        K = np.exp(-gamma * cdist(X[s:e], X, "sqeuclidean"))
        if form == "U":
            zero_block_diagonal(K, s)
        grad[s:e] = -(4.0 * gamma / pairs) * (X[s:e] * K.sum(axis=1, keepdims=True) - K @ X)
    sq = np.sum(X**2, axis=1, keepdims=True)
    grad += (4.0 * cross_gamma * cross_scale / n) * X * np.exp(-cross_gamma * sq)
    return grad


def mmd_kummer_analytic_sliced(
    gamma: float,
    sigma: float,
    X: SampleBatch,
    mode: KummerMode = KummerMode.EXACT,
    form: str = "U",
) -> DiscrepancyEstimate:
    """Infinite-slice Gaussian MMD^2 to N(0, sigma^2 I), pairs weighted by the Kummer kernel."""
    started = time.perf_counter()
    check_form(form)
    _require_pairs(X, form, "mmd_kummer_analytic_sliced")
    n, d = X.n, X.d
    if d < 2:
        raise InvalidArgumentError("mmd_kummer_analytic_sliced needs d >= 2")
    mode = KummerMode(mode)
    if mode is KummerMode.IMQ_APPROX and d < 4:
        raise InvalidArgumentError(f"ImqApprox needs d >= 4, got d={d}")
    exclude = form == "U"
    k = KummerKernel(gamma=gamma, d=d, mode=mode)
    spread = 1.0 + 2.0 * gamma * sigma**2

    rows = pair_row_sums(lambda s, e: gram_matrix(k, X.data[s:e], X.data), n, exclude)
    cross = spread**-0.5 * kummer_half_d(gamma * np.sum(X.data**2, axis=1) / spread, d, mode)
    const = (1.0 + 4.0 * gamma * sigma**2) ** -0.5
    pairs = n * (n - 1) if exclude else n * n
    value = rows.sum() / pairs - 2.0 * cross.mean() + const
    se = first_order_se(rows / (pairs / n) - cross)
    return build_estimate(value, "kummer-mmd", n, d, started, std_error=se, form=form)


def kummer_mmd_gradient(
    gamma: float, sigma: float, X: np.ndarray, mode: KummerMode = KummerMode.EXACT, form: str = "V"
) -> np.ndarray:
    n, d = X.shape
    k = KummerKernel(gamma=gamma, d=d, mode=mode)
    spread = 1.0 + 2.0 * gamma * sigma**2
    pairs = n * (n - 1) if form == "U" else n * n
    grad = np.empty_like(X)
    for s, e in row_blocks(n):
        _, dphi = kernel_profile(k, cdist(X[s:e], X, "sqeuclidean"), order=1)
        if form == "U":
            zero_block_diagonal(dphi, s)
        grad[s:e] = (4.0 / pairs) * (X[s:e] * dphi.sum(axis=1, keepdims=True) - dphi @ X)
    # cross term: psi(|x|^2) with psi(t) = spread^{-1/2} phi(t / spread)
    _, dpsi = kernel_profile(k, np.sum(X**2, axis=1) / spread, order=1)
    grad -= (4.0 / n) * spread**-1.5 * dpsi[:, None] * X
    return grad


def _vmf_check(X: SampleBatch, name: str) -> None:
    norms = np.linalg.norm(X.data, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise InvalidArgumentError(f"{name} needs unit-norm rows")


def mmd_vmf_sphere_energy(kappa: float, X: SampleBatch, form: str = "U") -> DiscrepancyEstimate:
    """Mean of exp(kappa x_i.x_j) over pairs, the P-dependent part of the vMF MMD to the uniform sphere."""
    started = time.perf_counter()
    check_form(form)
    _require_pairs(X, form, "mmd_vmf_sphere_energy")
    _vmf_check(X, "mmd_vmf_sphere_energy")
    n, d = X.n, X.d
    exclude = form == "U"

    # log-domain row reductions
    log_rows = np.empty(n)
    for s, e in row_blocks(n):
        expo = kappa * (X.data[s:e] @ X.data.T)
        if exclude:
            rows = np.arange(e - s)
            expo[rows, s + rows] = -np.inf
        log_rows[s:e] = logsumexp(expo, axis=1)
    pairs = n * (n - 1) if exclude else n * n
    log_value = logsumexp(log_rows) - np.log(pairs)
    value = float(np.exp(log_value))
    if not np.isfinite(value):
        raise NumericalError(f"vMF energy overflows for kappa={kappa} (log value {log_value:.1f})")
    h = np.exp(log_rows - np.log(pairs / n))
    return build_estimate(value, "vmf-mmd", n, d, started, std_error=first_order_se(h), form=form)


def vmf_energy_gradient(kappa: float, X: np.ndarray, form: str = "V") -> np.ndarray:
    """Euclidean gradient of the vMF energy; callers project onto the tangent space."""
    n = X.shape[0]
    pairs = n * (n - 1) if form == "U" else n * n
    grad = np.empty_like(X)
    for s, e in row_blocks(n):
        K = np.exp(kappa * (X[s:e] @ X.T))
        if form == "U":
            zero_block_diagonal(K, s)
        grad[s:e] = (2.0 * kappa / pairs) * (K @ X)
    return grad


def mmd_estimate(
    spec: MmdEstimatorSpec,
    X: SampleBatch,
    Y: Optional[SampleBatch] = None,
    rule: Optional[QuadratureRule] = None,
    mode: KummerMode = KummerMode.EXACT,
    form: str = "U",
) -> DiscrepancyEstimate:
    """Dispatch an MMD estimator by its taxonomy entry."""
    if spec.form is MmdForm.TWO_SAMPLE_U:
        if Y is None:
            raise InvalidArgumentError("two-sample MMD needs a second batch")
        return mmd_two_sample_u(spec.kernel, X, Y, form=form)
    if spec.form is MmdForm.CF_QUADRATURE_1D:
        if rule is None or spec.prior is None:
            raise InvalidArgumentError("cf-quadrature-1d needs a prior and a quadrature rule")
        return mmd_cf_quadrature_1d(spec.kernel.gamma, X, spec.prior, rule)
    if spec.form is MmdForm.GAUSSIAN_CLOSED_FORM:
        return mmd_gaussian_closed_form(spec.kernel.gamma, spec.prior.sigma, X, form=form)
    if spec.form is MmdForm.KUMMER_ANALYTIC_SLICED:
        return mmd_kummer_analytic_sliced(spec.kernel.gamma, spec.prior.sigma, X, mode=mode, form=form)
    if spec.form is MmdForm.VMF_SPHERE_ENERGY:
        return mmd_vmf_sphere_energy(spec.kernel.kappa, X, form=form)
    raise UnsupportedOperationError(f"Unknown MMD form {spec.form}")
