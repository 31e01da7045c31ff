from enum import Enum
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import DEFAULT_GAMMA, DEFAULT_KNOTS
from ..kernels.schemas import GaussianKernel, ImqKernel, KernelSpec, VmfKernel
from ..priors.schemas import GaussianPrior, LaplacePrior, PriorSpec, UniformSpherePrior
from ..specfun.quadrature import gauss_hermite
from ..specfun.schemas import QuadratureRule


class MmdForm(str, Enum):
    TWO_SAMPLE_U = "two-sample-u"
    CF_QUADRATURE_1D = "cf-quadrature-1d"
    GAUSSIAN_CLOSED_FORM = "gaussian-closed-form"
    KUMMER_ANALYTIC_SLICED = "kummer-analytic-sliced"
    VMF_SPHERE_ENERGY = "vmf-sphere-energy"


class MmdEstimatorSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kernel: KernelSpec
    prior: Optional[PriorSpec] = None
    form: MmdForm

    @model_validator(mode="after")
    def _check_pairing(self):
        gaussian_pair = isinstance(self.kernel, GaussianKernel) and isinstance(self.prior, GaussianPrior)
        if self.form in (MmdForm.GAUSSIAN_CLOSED_FORM, MmdForm.KUMMER_ANALYTIC_SLICED) and not gaussian_pair:
            raise ValueError(f"{self.form.value} needs a Gaussian kernel and a Gaussian prior")
        if self.form is MmdForm.VMF_SPHERE_ENERGY and not (
            isinstance(self.kernel, VmfKernel) and isinstance(self.prior, UniformSpherePrior)
        ):
            raise ValueError("vmf-sphere-energy needs a vMF kernel and the uniform sphere prior")
        if self.form is MmdForm.CF_QUADRATURE_1D and not isinstance(self.kernel, GaussianKernel):
            raise ValueError("cf-quadrature-1d integrates against the Gaussian spectral density")
        return self


class SteinKernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: Union[GaussianKernel, ImqKernel] = Field(discriminator="kind")
    prior: PriorSpec

    @model_validator(mode="after")
    def _check_prior(self):
        if isinstance(self.prior, UniformSpherePrior):
            raise ValueError("use vmf_stein_ksd for the uniform sphere target")
        return self


class SliceFamily(str, Enum):
    MMD_REG = "mmd-reg"
    KSD_REG = "ksd-reg"


class ScoreMode(str, Enum):
    PROJECTED_AMBIENT = "projected-ambient"
    PSEUDO_CODE_FAITHFUL = "pseudo-code-faithful"


class SliceMetric(str, Enum):
    GAUSSIAN_MMD_CLOSED_FORM_1D = "gaussian-mmd-closed-form-1d"
    GAUSSIAN_STEIN_KERNEL_1D = "gaussian-stein-kernel-1d"


class SlicedRegSpec(BaseModel):
    """Finite-slice regularizer: m random directions, Gauss-Hermite rule over frequencies."""

    model_config = ConfigDict(frozen=True)

    family: SliceFamily
    prior: Union[GaussianPrior, LaplacePrior] = Field(discriminator="kind")
    slices: int = Field(default=256, ge=1)
    rule: QuadratureRule = Field(default_factory=lambda: gauss_hermite(DEFAULT_KNOTS))
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    score_mode: ScoreMode = ScoreMode.PROJECTED_AMBIENT
    projected_cf: bool = False

    @property
    def sigma(self) -> float:
        return self.prior.sigma
