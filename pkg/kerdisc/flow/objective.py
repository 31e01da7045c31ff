from typing import Callable, List, Optional

import numpy as np

from ..config import logger
from ..core.sampling import sample_directions
from ..core.schemas import SampleBatch, RngState, DirectionSet, DiscrepancyEstimate
from ..discrepancy.ksd import (
    ksd_gradient,
    ksd_u_statistic,
    sliced_ksd_analytic,
    vmf_stein_gradient,
    vmf_stein_ksd,
)
from ..discrepancy.mmd import (
    bhep_gradient,
    kummer_mmd_gradient,
    mmd_gaussian_closed_form,
    mmd_kummer_analytic_sliced,
    mmd_vmf_sphere_energy,
    vmf_energy_gradient,
)
from ..discrepancy.schemas import SlicedRegSpec, SliceFamily, SteinKernelSpec
from ..discrepancy.sliced import sliced_ksd_reg, sliced_ksd_reg_gradient, sliced_mmd_reg, sliced_mmd_reg_gradient
from ..exceptions import InvalidArgumentError, UnsupportedOperationError
from ..priors.schemas import GaussianPrior, LaplacePrior, UniformSpherePrior
from ..specfun.quadrature import gauss_hermite

FD_RELATIVE_STEP = 1e-4


def alignment_loss(za, zb) -> float:
    za = np.asarray(za, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    if za.shape != zb.shape:
        raise InvalidArgumentError(f"alignment_loss dimension mismatch: {za.shape} vs {zb.shape}")
    return float(np.sum((za - zb) ** 2))


def _require_prior(omega, prior, allowed, what: str) -> None:
    if not isinstance(prior, allowed):
        raise InvalidArgumentError(f"{omega.kind} regularizer needs {what}, got the {prior.kind} prior")


def sliced_spec(omega, prior) -> SlicedRegSpec:
    _require_prior(omega, prior, (GaussianPrior, LaplacePrior), "a Gaussian or Laplace prior")
    family = SliceFamily.MMD_REG if omega.kind == "sliced-mmd" else SliceFamily.KSD_REG
    return SlicedRegSpec(
        family=family,
        prior=prior,
        slices=omega.slices,
        rule=gauss_hermite(omega.knots),
        gamma=omega.gamma,
        score_mode=omega.score_mode,
        projected_cf=getattr(omega, "projected_cf", False),
    )


def evaluate_regularizer(
    omega, prior, Z: SampleBatch, rng: RngState, directions: Optional[DirectionSet] = None
) -> DiscrepancyEstimate:
    """Value of the regularizer Omega(Z; prior)."""
    if Z.d != prior.d:
        raise InvalidArgumentError(f"prior has d={prior.d}, particles have d={Z.d}")
    kind = omega.kind
    if kind == "bhep":
        _require_prior(omega, prior, GaussianPrior, "a Gaussian prior")
        return mmd_gaussian_closed_form(omega.gamma, prior.sigma, Z, form=omega.form)
    if kind == "kummer-mmd":
        _require_prior(omega, prior, GaussianPrior, "a Gaussian prior")
        return mmd_kummer_analytic_sliced(omega.gamma, prior.sigma, Z, mode=omega.mode, form=omega.form)
    if kind == "sliced-mmd":
        return sliced_mmd_reg(sliced_spec(omega, prior), Z, rng, directions)
    if kind == "sliced-ksd":
        return sliced_ksd_reg(sliced_spec(omega, prior), Z, rng, directions)
    if kind == "ksd":
        return ksd_u_statistic(SteinKernelSpec(base=omega.base, prior=prior), Z, form=omega.form)
    if kind == "sliced-ksd-analytic":
        _require_prior(omega, prior, GaussianPrior, "a Gaussian prior")
        return sliced_ksd_analytic(omega.gamma, prior.sigma, Z, mode=omega.mode, form=omega.form)
    if kind == "vmf-mmd":
        _require_prior(omega, prior, UniformSpherePrior, "the uniform sphere prior")
        return mmd_vmf_sphere_energy(omega.kappa, Z, form=omega.form)
    if kind == "vmf-ksd":
        _require_prior(omega, prior, UniformSpherePrior, "the uniform sphere prior")
        return vmf_stein_ksd(omega.kappa, Z, kernel_form=omega.kernel_form, form=omega.form)
    raise UnsupportedOperationError(f"Unknown regularizer {kind!r}")


def finite_difference_gradient(fn: Callable[[np.ndarray], float], Z: np.ndarray, step: float) -> np.ndarray:
    """Central differences of fn over every coordinate of Z."""
    grad = np.empty_like(Z)
    work = Z.copy()
    for idx in np.ndindex(Z.shape):
        original = work[idx]
        work[idx] = original + step
        upper = fn(work)
        work[idx] = original - step
        lower = fn(work)
        work[idx] = original
        grad[idx] = (upper - lower) / (2.0 * step)
    return grad


def _fd_step(Z: np.ndarray) -> float:
    scale = float(np.sqrt(np.mean(Z**2)))
    return FD_RELATIVE_STEP * max(scale, 1e-3)


def regularizer_gradient(omega, prior, Z: np.ndarray, rng: RngState, analytic: bool = True) -> np.ndarray:
    """Gradient of Omega with respect to the particles; analytic where available, otherwise central differences."""
    kind = omega.kind
    on_sphere = isinstance(prior, UniformSpherePrior)
    directions = None
    if kind in ("sliced-mmd", "sliced-ksd"):
        directions = sample_directions(omega.slices, Z.shape[1], rng)

    if analytic:
        try:
            if kind == "bhep":
                return bhep_gradient(omega.gamma, prior.sigma, Z, form=omega.form)
            if kind == "kummer-mmd":
                return kummer_mmd_gradient(omega.gamma, prior.sigma, Z, mode=omega.mode, form=omega.form)
            if kind == "ksd":
                return ksd_gradient(SteinKernelSpec(base=omega.base, prior=prior), Z, form=omega.form)
            if kind == "sliced-mmd":
                return sliced_mmd_reg_gradient(sliced_spec(omega, prior), Z, directions.dirs)
            if kind == "sliced-ksd":
                return sliced_ksd_reg_gradient(sliced_spec(omega, prior), Z, directions.dirs)
            if kind == "vmf-mmd":
                return vmf_energy_gradient(omega.kappa, Z, form=omega.form)
            if kind == "vmf-ksd":
                return vmf_stein_gradient(omega.kappa, Z, kernel_form=omega.kernel_form, form=omega.form)
        except UnsupportedOperationError as e:
            logger.info(f"Falling back to finite differences for {kind}: {e}")

    def value(points: np.ndarray) -> float:
        if on_sphere:
            points = points / np.linalg.norm(points, axis=1, keepdims=True)
        batch = SampleBatch(data=points, on_sphere=on_sphere)
        return evaluate_regularizer(omega, prior, batch, rng, directions).value

    return finite_difference_gradient(value, Z, _fd_step(Z))


def _pairwise_alignment(group: np.ndarray) -> float:
    diffs = group[:, None, :] - group[None, :, :]
    v = group.shape[0]
    return float(np.sum(diffs**2) / 2.0 / (v * (v - 1) / 2.0))


def alignment_term(Z: np.ndarray, views: int) -> float:
    """Mean over instances of the mean squared distance between their view pairs."""
    if views < 2:
        return 0.0
    groups = Z.reshape(-1, views, Z.shape[1])
    return float(np.mean([_pairwise_alignment(g) for g in groups]))


def alignment_gradient(Z: np.ndarray, views: int) -> np.ndarray:
    if views < 2:
        return np.zeros_like(Z)
    groups = Z.reshape(-1, views, Z.shape[1])
    pairs = views * (views - 1) / 2.0
    grad = (2.0 / (groups.shape[0] * pairs)) * (views * groups - groups.sum(axis=1, keepdims=True))
    return grad.reshape(Z.shape)


def ssl_objective(views: List[np.ndarray], lam: float, omega, prior, rng: Optional[RngState] = None) -> float:
    """Mean positive-pair alignment over instances plus lam * Omega over the pooled embeddings."""
    groups = [np.atleast_2d(np.asarray(g, dtype=np.float64)) for g in views]
    if not groups:
        raise InvalidArgumentError("ssl_objective needs at least one view group")
    dims = {g.shape[1] for g in groups}
    if len(dims) != 1:
        raise InvalidArgumentError(f"view groups disagree on dimension: {sorted(dims)}")
    for index, g in enumerate(groups):
        if g.shape[0] < 2:
            raise InvalidArgumentError(f"view group {index} has {g.shape[0]} view(s), needs at least 2")

    alignment = float(np.mean([_pairwise_alignment(g) for g in groups]))
    if lam == 0:
        return alignment
    pooled = SampleBatch(data=np.vstack(groups), on_sphere=isinstance(prior, UniformSpherePrior))
    reg = evaluate_regularizer(omega, prior, pooled, rng or RngState())
    return alignment + lam * reg.value
