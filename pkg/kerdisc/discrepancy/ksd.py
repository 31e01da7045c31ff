import time
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from ..config import logger, COINCIDENT_ATOL
from ..core.schemas import SampleBatch, DiscrepancyEstimate
from ..exceptions import InvalidArgumentError
from ..kernels.base import kernel_profile
from ..priors.densities import score, score_1d, score_hvp
from ..specfun.kummer import kummer_half_d, kummer_m
from ..specfun.schemas import KummerMode, QuadratureRule
from .pairwise import pair_row_sums, row_blocks, zero_block_diagonal
from .schemas import SteinKernelSpec
from .utils import build_estimate, check_form, first_order_se


class SteinKernelValue(NamedTuple):
    value: float
    degenerate: bool


def _stein_block(s: SteinKernelSpec, Xb, X, Sb, S) -> np.ndarray:
    """k_stein between the rows of Xb and X given their scores Sb and S."""
    d = X.shape[1]
    q = cdist(Xb, X, "sqeuclidean")
    phi, d1, d2 = kernel_profile(s.base, q, order=2)
    # (s_x - s_y).(x - y)
    dot = np.sum(Sb * Xb, axis=1)[:, None] - Sb @ X.T - Xb @ S.T + np.sum(S * X, axis=1)[None, :]
    return (Sb @ S.T) * phi - 2.0 * d1 * dot - 2.0 * d * d1 - 4.0 * d2 * q


def stein_kernel_eval(s: SteinKernelSpec, x, y) -> SteinKernelValue:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.size != s.prior.d:
        raise InvalidArgumentError(f"stein_kernel_eval needs points of dimension {s.prior.d}")
    sx, sy = score(s.prior, x), score(s.prior, y)
    value = _stein_block(s, x[None, :], y[None, :], sx.values[None, :], sy.values[None, :])[0, 0]
    return SteinKernelValue(float(value), sx.degenerate or sy.degenerate)


def ksd_u_statistic(s: SteinKernelSpec, X: SampleBatch, form: str = "U") -> DiscrepancyEstimate:
    """Squared KSD as the pair mean of the Stein kernel (U-statistic, or V-statistic with form='V')."""
    started = time.perf_counter()
    check_form(form)
    n, d = X.n, X.d
    if form == "U" and n < 2:
        raise InvalidArgumentError(f"ksd_u_statistic needs n >= 2, got n={n}")
    if d != s.prior.d:
        raise InvalidArgumentError(f"prior has d={s.prior.d}, samples have d={d}")
    logger.info(f"Computing KSD for n={n}, d={d}, base={s.base.kind}, prior={s.prior.kind}")
    scores = score(s.prior, X.data)
    if scores.degenerate:
        logger.warning("KSD input touches the Laplace score singularity; zero subgradient used")
    S = scores.values

    exclude = form == "U"
    rows = pair_row_sums(lambda a, b: _stein_block(s, X.data[a:b], X.data, S[a:b], S), n, exclude)
    pairs = n * (n - 1) if exclude else n * n
    value = rows.sum() / pairs
    se = first_order_se(rows / (pairs / n))
    return build_estimate(value, "ksd", n, d, started, std_error=se, form=form)


def ksd_gradient(s: SteinKernelSpec, X: np.ndarray, form: str = "V") -> np.ndarray:
    """Gradient of the Stein-kernel pair mean with respect to every particle."""
    n, d = X.shape
    S = score(s.prior, X).values
    pairs = n * (n - 1) if form == "U" else n * n
    grad = np.empty_like(X)
    for a, b in row_blocks(n):
        Xb, Sb = X[a:b], S[a:b]
        q = cdist(Xb, X, "sqeuclidean")
        phi, d1, d2, d3 = kernel_profile(s.base, q, order=3)
        if form == "U":
            for mat in (phi, d1, d2, d3):
                zero_block_diagonal(mat, a)
        sdot = Sb @ S.T
        # (s_i - s_j).(x_i - x_j)
        diff_dot = np.sum(Sb * Xb, axis=1)[:, None] - Sb @ X.T - Xb @ S.T + np.sum(S * X, axis=1)[None, :]

        # weights multiplying (x_i - x_j)
        w = 2.0 * d1 * sdot - 4.0 * d2 * diff_dot - 4.0 * d * d2 - 8.0 * d3 * q - 8.0 * d2
        radial = Xb * w.sum(axis=1, keepdims=True) - w @ X
        # score-Jacobian terms: J_i (sum_j phi s_j - 2 phi' (x_i - x_j))
        jac_arg = phi @ S - 2.0 * (Xb * d1.sum(axis=1, keepdims=True) - d1 @ X)
        jac = score_hvp(s.prior, Xb, jac_arg)
        # -2 phi' (s_i - s_j)
        score_term = -2.0 * (Sb * d1.sum(axis=1, keepdims=True) - d1 @ S)
        grad[a:b] = (2.0 / pairs) * (radial + jac + score_term)
    return grad


def ksd_spectral_1d(
    prior_score: str,
    sigma: float,
    X1: SampleBatch,
    gamma: float,
    rule: QuadratureRule,
    nu: float = 5.0,
) -> DiscrepancyEstimate:
    """V-form Gaussian-kernel KSD^2 of one-dimensional samples through the Stein-weighted empirical CF."""
    started = time.perf_counter()
    if X1.d != 1:
        raise InvalidArgumentError(f"ksd_spectral_1d needs one-dimensional samples, got d={X1.d}")
    x = X1.data[:, 0]
    s = score_1d(prior_score, x, sigma, nu)[:, None]
    omega = rule.frequencies(gamma)[None, :]
    args = x[:, None] * omega
    cos, sin = np.cos(args), np.sin(args)
    re = s * cos - omega * sin
    im = s * sin + omega * cos
    re_mean, im_mean = re.mean(axis=0), im.mean(axis=0)
    value = float((re_mean**2 + im_mean**2) @ rule.weights)
    influence = ((re - re_mean) * re_mean + (im - im_mean) * im_mean) @ rule.weights
    return build_estimate(value, "ksd-spectral", X1.n, 1, started, std_error=first_order_se(influence), form="V", knots=rule.size)


def _sliced_ksd_block(gamma, sigma, Xb, X, start, mode, exclude):
    """Direction-averaged one-dimensional Stein kernel for rows Xb against X; NaN marks excluded pairs.

    ``EXACT`` averages over uniform unit directions. ``IMQ_APPROX`` averages over Gaussian directions
    theta ~ N(0, I/(d - 3/2)), whose M(1/2) factor is the IMQ surrogate and whose M(3/2) factor comes from
    the same family, so the block stays a positive semi-definite kernel.
    """
    d = X.shape[1]
    r2 = cdist(Xb, X, "sqeuclidean")
    G = Xb @ X.T
    nb = np.sum(Xb * Xb, axis=1)[:, None]
    nn = np.sum(X * X, axis=1)[None, :]
    coincident = r2 < COINCIDENT_ATOL**2
    safe = np.where(coincident, 1.0, r2)
    ab = (nb - G) * (G - nn) / safe

    c = gamma * r2
    s4 = sigma**4
    drift = 2.0 * gamma / sigma**2 + 4.0 * gamma**2
    m1 = kummer_half_d(c, d, mode)
    if mode is KummerMode.IMQ_APPROX:
        v = 1.0 / (d - 1.5)
        t2w = v * m1**3
        values = m1 * (2.0 * gamma + v * (G - ab) / s4) + t2w * ab / s4 - drift * r2 * t2w
        same_point = 2.0 * gamma + v * nb / s4
    else:
        m3 = kummer_m(1.5, 0.5 * d + 1.0, -c)
        perp = (G - ab) / (s4 * (d - 1))
        values = m1 * (2.0 * gamma + perp) + (m3 / d) * (ab / s4 - perp) - (m3 / d) * drift * r2
        same_point = 2.0 * gamma + nb / (d * s4)

    rows = np.arange(Xb.shape[0])
    diagonal = np.zeros_like(coincident)
    diagonal[rows, start + rows] = True
    # same-point value averaged over directions
    values = np.where(diagonal, same_point, values)
    if exclude:
        values[diagonal] = np.nan
    values[coincident & ~diagonal] = np.nan
    return values


def sliced_ksd_analytic(
    gamma: float,
    sigma: float,
    X: SampleBatch,
    mode: KummerMode = KummerMode.EXACT,
    form: str = "U",
) -> DiscrepancyEstimate:
    """Infinite-slice Gaussian-kernel KSD^2 to N(0, sigma^2 I) in closed form over pairs."""
    started = time.perf_counter()
    check_form(form)
    n, d = X.n, X.d
    if d < 2:
        raise InvalidArgumentError("sliced_ksd_analytic needs d >= 2")
    if form == "U" and n < 2:
        raise InvalidArgumentError(f"sliced_ksd_analytic needs n >= 2, got n={n}")
    mode = KummerMode(mode)
    if mode is KummerMode.IMQ_APPROX and d < 4:
        raise InvalidArgumentError(f"ImqApprox needs d >= 4, got d={d}")

    sums = np.empty(n)
    counts = np.empty(n)
    for a, b in row_blocks(n):
        values = _sliced_ksd_block(gamma, sigma, X.data[a:b], X.data, a, mode, form == "U")
        kept = ~np.isnan(values)
        sums[a:b] = np.where(kept, values, 0.0).sum(axis=1)
        counts[a:b] = kept.sum(axis=1)
    expected = n * (n - 1) if form == "U" else n * n
    total = counts.sum()
    if total < expected:
        logger.warning(f"sliced_ksd_analytic excluded {int(expected - total)} coincident pair(s)")
    if total == 0:
        raise InvalidArgumentError("every pair is coincident")
    value = sums.sum() / total
    h = np.divide(sums, counts, out=np.zeros(n), where=counts > 0)
    return build_estimate(value, "sliced-ksd-analytic", n, d, started, std_error=first_order_se(h), form=form)


VMF_KERNEL_FORMS = ("divergence", "tangent")


def vmf_stein_kernel(kappa: float, t, d: int, kernel_form: str = "divergence"):
    """vMF-based Stein kernel for the uniform sphere target as a function of t = x.y.

    ``divergence`` is div_x div_y [k P_x P_y] with tangent projectors P; ``tangent`` is the trace of
    the tangent-projected mixed Hessian, kappa e^{kappa t} [kappa t^3 + t^2 - kappa t + d - 2].
    """
    t = np.asarray(t, dtype=np.float64)
    if kernel_form == "tangent":
        out = kappa * np.exp(kappa * t) * (kappa * t**3 + t**2 - kappa * t + d - 2.0)
    elif kernel_form == "divergence":
        poly = kappa * (d - 1.0) - kappa * (1.0 - t**2) * (kappa * t + 2.0 * d - 1.0) + (d - 1.0) ** 2 * t
        out = np.exp(kappa * t) * poly
    else:
        raise InvalidArgumentError(f"Unknown vMF Stein kernel form {kernel_form!r}")
    return float(out) if np.ndim(out) == 0 else out


def vmf_stein_kernel_derivative(kappa: float, t, d: int, kernel_form: str = "divergence"):
    t = np.asarray(t, dtype=np.float64)
    if kernel_form == "tangent":
        poly = kappa * t**3 + t**2 - kappa * t + d - 2.0
        dpoly = 3.0 * kappa * t**2 + 2.0 * t - kappa
        return kappa * np.exp(kappa * t) * (kappa * poly + dpoly)
    poly = kappa * (d - 1.0) - kappa * (1.0 - t**2) * (kappa * t + 2.0 * d - 1.0) + (d - 1.0) ** 2 * t
    dpoly = 2.0 * kappa * t * (kappa * t + 2.0 * d - 1.0) - kappa**2 * (1.0 - t**2) + (d - 1.0) ** 2
    return np.exp(kappa * t) * (kappa * poly + dpoly)


def _check_sphere_batch(X: SampleBatch) -> None:
    if np.any(np.abs(np.linalg.norm(X.data, axis=1) - 1.0) > 1e-9):
        raise InvalidArgumentError("vmf_stein_ksd needs unit-norm rows")


def vmf_stein_ksd(kappa: float, X: SampleBatch, kernel_form: str = "divergence", form: str = "U") -> DiscrepancyEstimate:
    """Stein discrepancy of a sphere sample to the uniform distribution with the vMF base kernel."""
    started = time.perf_counter()
    check_form(form)
    _check_sphere_batch(X)
    n, d = X.n, X.d
    if d < 2 or (form == "U" and n < 2):
        raise InvalidArgumentError(f"vmf_stein_ksd needs d >= 2 and n >= 2, got n={n}, d={d}")
    exclude = form == "U"
    rows = pair_row_sums(
        lambda a, b: vmf_stein_kernel(kappa, np.clip(X.data[a:b] @ X.data.T, -1.0, 1.0), d, kernel_form), n, exclude
    )
    pairs = n * (n - 1) if exclude else n * n
    value = rows.sum() / pairs
    se = first_order_se(rows / (pairs / n))
    return build_estimate(value, "vmf-ksd", n, d, started, std_error=se, form=form)


def vmf_stein_gradient(kappa: float, X: np.ndarray, kernel_form: str = "divergence", form: str = "V") -> np.ndarray:
    """Euclidean gradient of the vMF Stein pair mean; callers project onto the tangent space."""
    n, d = X.shape
    pairs = n * (n - 1) if form == "U" else n * n
    grad = np.empty_like(X)
    for a, b in row_blocks(n):
        deriv = vmf_stein_kernel_derivative(kappa, np.clip(X[a:b] @ X.T, -1.0, 1.0), d, kernel_form)
        if form == "U":
            zero_block_diagonal(deriv, a)
        grad[a:b] = (2.0 / pairs) * (deriv @ X)
    return grad
