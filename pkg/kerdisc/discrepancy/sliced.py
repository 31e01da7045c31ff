import time
from typing import Optional, Tuple

import numpy as np

from ..config import logger, DEFAULT_GAMMA
from ..core.sampling import sample_directions
from ..core.schemas import SampleBatch, DirectionSet, RngState, DiscrepancyEstimate
from ..exceptions import InvalidArgumentError, UnsupportedOperationError
from ..priors.densities import cf_slice, score, score_1d
from ..priors.schemas import GaussianPrior, LaplacePrior
from .schemas import SlicedRegSpec, SliceFamily, SliceMetric, ScoreMode
from .utils import build_estimate

ELEMENTS_PER_CHUNK = 4_000_000


def _slice_chunks(n: int, m: int, width: int):
    step = max(1, ELEMENTS_PER_CHUNK // max(1, n * width))
    for start in range(0, m, step):
        yield start, min(start + step, m)


def _directions(spec: SlicedRegSpec, d: int, rng: RngState, directions: Optional[DirectionSet]) -> np.ndarray:
    if directions is None:
        return sample_directions(spec.slices, d, rng).dirs
    if directions.d != d:
        raise InvalidArgumentError(f"fixed directions have d={directions.d}, samples have d={d}")
    return directions.dirs


def _slice_scores(spec: SlicedRegSpec, Z: np.ndarray, proj: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if spec.score_mode is ScoreMode.PSEUDO_CODE_FAITHFUL:
        return score_1d(spec.prior.kind, proj, spec.sigma)
    return score(spec.prior, Z).values @ theta.T


def _folded_rule(spec: SlicedRegSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Frequencies and weights, folded onto omega >= 0 when the rule is symmetric about zero.

    Every per-slice value and gradient below is even in omega, so mirrored knots contribute equally.
    """
    knots, weights = spec.rule.knots, spec.rule.weights
    omega = spec.rule.frequencies(spec.gamma)
    if not (np.array_equal(knots, -knots[::-1]) and np.array_equal(weights, weights[::-1])):
        return omega, weights
    half = knots.size // 2
    folded = 2.0 * weights[half:]
    if knots.size % 2:
        folded[0] = weights[half]
    return omega[half:], folded


def _mmd_slice_values(spec: SlicedRegSpec, Z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    proj = Z @ theta.T
    omega, weights = _folded_rule(spec)
    target = cf_slice(spec.prior, omega, projected=spec.projected_cf)
    cosine_only = spec.score_mode is ScoreMode.PSEUDO_CODE_FAITHFUL
    values = np.empty(theta.shape[0])
    for a, b in _slice_chunks(Z.shape[0], theta.shape[0], omega.size):
        args = proj[:, a:b, None] * omega
        err = (np.cos(args).mean(axis=0) - target) ** 2
        if not cosine_only:
            err += np.sin(args).mean(axis=0) ** 2
        values[a:b] = err @ weights
    return values


def _ksd_slice_values(spec: SlicedRegSpec, Z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    proj = Z @ theta.T
    s = _slice_scores(spec, Z, proj, theta)
    omega, weights = _folded_rule(spec)
    values = np.empty(theta.shape[0])
    for a, b in _slice_chunks(Z.shape[0], theta.shape[0], omega.size):
        args = proj[:, a:b, None] * omega
        cos, sin = np.cos(args), np.sin(args)
        sc = s[:, a:b, None]
        re = (sc * cos - omega * sin).mean(axis=0)
        im = (sc * sin + omega * cos).mean(axis=0)
        values[a:b] = (re**2 + im**2) @ weights
    return values


def _finish(spec: SlicedRegSpec, name: str, values: np.ndarray, Z: SampleBatch, rng: RngState, started: float):
    m = values.size
    se = float(np.std(values, ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return build_estimate(
        float(values.mean()), name, Z.n, Z.d, started,
        std_error=se, form="V", slices=m, knots=spec.rule.size, seed=rng.seed,
    )


def sliced_mmd_reg(
    spec: SlicedRegSpec, Z: SampleBatch, rng: RngState, directions: Optional[DirectionSet] = None
) -> DiscrepancyEstimate:
    """Slice-averaged squared CF error to the per-slice target, integrated by Gauss-Hermite quadrature."""
    started = time.perf_counter()
    if spec.family is not SliceFamily.MMD_REG:
        raise InvalidArgumentError("sliced_mmd_reg needs an mmd-reg spec")
    theta = _directions(spec, Z.d, rng, directions)
    logger.debug(f"sliced MMD: n={Z.n}, d={Z.d}, slices={theta.shape[0]}, knots={spec.rule.size}")
    return _finish(spec, "sliced-mmd", _mmd_slice_values(spec, Z.data, theta), Z, rng, started)


def sliced_ksd_reg(
    spec: SlicedRegSpec, Z: SampleBatch, rng: RngState, directions: Optional[DirectionSet] = None
) -> DiscrepancyEstimate:
    """Slice-averaged spectral Stein statistic against the per-slice score."""
    started = time.perf_counter()
    if spec.family is not SliceFamily.KSD_REG:
        raise InvalidArgumentError("sliced_ksd_reg needs a ksd-reg spec")
    theta = _directions(spec, Z.d, rng, directions)
    logger.debug(f"sliced KSD: n={Z.n}, d={Z.d}, slices={theta.shape[0]}, knots={spec.rule.size}")
    return _finish(spec, "sliced-ksd", _ksd_slice_values(spec, Z.data, theta), Z, rng, started)


def sliced_mmd_reg_gradient(spec: SlicedRegSpec, Z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    n = Z.shape[0]
    proj = Z @ theta.T
    omega, weights = _folded_rule(spec)
    target = cf_slice(spec.prior, omega, projected=spec.projected_cf)
    cosine_only = spec.score_mode is ScoreMode.PSEUDO_CODE_FAITHFUL
    dproj = np.empty_like(proj)
    for a, b in _slice_chunks(n, theta.shape[0], omega.size):
        args = proj[:, a:b, None] * omega
        sin = np.sin(args)
        cos = np.cos(args)
        # d/du of the weighted squared CF error, contracted over knots
        du = np.einsum("ijk,jk->ij", sin, -(cos.mean(axis=0) - target) * omega * weights)
        if not cosine_only:
            du += np.einsum("ijk,jk->ij", cos, sin.mean(axis=0) * omega * weights)
        dproj[:, a:b] = (2.0 / n) * du
    return dproj @ theta / theta.shape[0]


def sliced_ksd_reg_gradient(spec: SlicedRegSpec, Z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if isinstance(spec.prior, LaplacePrior) and spec.score_mode is ScoreMode.PROJECTED_AMBIENT:
        raise UnsupportedOperationError("projected Laplace slice scores depend on more than the projection")
    n = Z.shape[0]
    proj = Z @ theta.T
    s = _slice_scores(spec, Z, proj, theta)
    ds = -1.0 / spec.sigma**2 if isinstance(spec.prior, GaussianPrior) else 0.0
    omega, weights = _folded_rule(spec)
    dproj = np.empty_like(proj)
    for a, b in _slice_chunks(n, theta.shape[0], omega.size):
        args = proj[:, a:b, None] * omega
        cos, sin = np.cos(args), np.sin(args)
        sc = s[:, a:b, None]
        re = (sc * cos - omega * sin).mean(axis=0)
        im = (sc * sin + omega * cos).mean(axis=0)
        dre = ds * cos - sc * omega * sin - omega**2 * cos
        dim = ds * sin + sc * omega * cos - omega**2 * sin
        dproj[:, a:b] = (2.0 / n) * ((re * dre + im * dim) @ weights)
    return dproj @ theta / theta.shape[0]


def _oracle_slice_values(metric: SliceMetric, proj: np.ndarray, sigma: float, gamma: float) -> np.ndarray:
    n = proj.shape[0]
    values = np.empty(proj.shape[1])
    for a, b in _slice_chunks(n, proj.shape[1], n):
        u = proj[:, a:b]
        diff2 = (u[:, None, :] - u[None, :, :]) ** 2
        kern = np.exp(-gamma * diff2)
        if metric is SliceMetric.GAUSSIAN_MMD_CLOSED_FORM_1D:
            spread = 1.0 + 2.0 * gamma * sigma**2
            pair = (kern.sum(axis=(0, 1)) - n) / (n * (n - 1))
            cross = spread**-0.5 * np.exp(-gamma * u**2 / spread).mean(axis=0)
            values[a:b] = pair - 2.0 * cross + (1.0 + 4.0 * gamma * sigma**2) ** -0.5
        else:
            uv = u[:, None, :] * u[None, :, :]
            stein = (uv / sigma**4 - (2.0 * gamma / sigma**2 + 4.0 * gamma**2) * diff2 + 2.0 * gamma) * kern
            diag = (u**2 / sigma**4 + 2.0 * gamma).sum(axis=0)
            values[a:b] = (stein.sum(axis=(0, 1)) - diag) / (n * (n - 1))
    return values


def mc_slice_oracle(
    metric: SliceMetric,
    X: SampleBatch,
    p,
    m: int,
    rng: RngState,
    gamma: float = DEFAULT_GAMMA,
) -> Tuple[float, float]:
    """Mean and standard error over m random directions of an exact one-dimensional U-statistic."""
    metric = SliceMetric(metric)
    if m < 2:
        raise InvalidArgumentError(f"mc_slice_oracle needs m >= 2, got m={m}")
    if X.n < 2:
        raise InvalidArgumentError("mc_slice_oracle needs n >= 2")
    if not isinstance(p, GaussianPrior):
        raise UnsupportedOperationError("the slicing oracle targets Gaussian priors")
    theta = sample_directions(m, X.d, rng).dirs
    values = _oracle_slice_values(metric, X.data @ theta.T, p.sigma, gamma)
    logger.info(f"Slice oracle {metric.value}: m={m}, n={X.n}, d={X.d}, mean={values.mean():.6g}")
    return float(values.mean()), float(np.std(values, ddof=1) / np.sqrt(m))
