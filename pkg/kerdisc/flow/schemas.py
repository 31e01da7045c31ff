from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..config import DEFAULT_GAMMA, DEFAULT_KNOTS
from ..core.schemas import SampleBatch
from ..discrepancy.schemas import ScoreMode
from ..kernels.schemas import GaussianKernel, ImqKernel
from ..specfun.schemas import KummerMode

Form = Literal["U", "V"]


class _Regularizer(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    form: Form = "V"


class BhepRegularizer(_Regularizer):
    kind: Literal["bhep"] = "bhep"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)


class KummerMmdRegularizer(_Regularizer):
    kind: Literal["kummer-mmd"] = "kummer-mmd"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    mode: KummerMode = KummerMode.EXACT


class SlicedMmdRegularizer(_Regularizer):
    kind: Literal["sliced-mmd"] = "sliced-mmd"
    slices: int = Field(default=256, ge=1)
    knots: int = Field(default=DEFAULT_KNOTS, ge=1, le=256)
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    score_mode: ScoreMode = ScoreMode.PROJECTED_AMBIENT
    projected_cf: bool = False


class KsdRegularizer(_Regularizer):
    kind: Literal["ksd"] = "ksd"
    base: Union[GaussianKernel, ImqKernel] = Field(default_factory=GaussianKernel, discriminator="kind")


class SlicedKsdRegularizer(_Regularizer):
    kind: Literal["sliced-ksd"] = "sliced-ksd"
    slices: int = Field(default=256, ge=1)
    knots: int = Field(default=DEFAULT_KNOTS, ge=1, le=256)
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    score_mode: ScoreMode = ScoreMode.PROJECTED_AMBIENT


class SlicedKsdAnalyticRegularizer(_Regularizer):
    kind: Literal["sliced-ksd-analytic"] = "sliced-ksd-analytic"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    mode: KummerMode = KummerMode.EXACT


class VmfMmdRegularizer(_Regularizer):
    kind: Literal["vmf-mmd"] = "vmf-mmd"
    kappa: float = Field(default=1.0, gt=0)


class VmfKsdRegularizer(_Regularizer):
    kind: Literal["vmf-ksd"] = "vmf-ksd"
    kappa: float = Field(default=1.0, gt=0)
    kernel_form: Literal["divergence", "tangent"] = "divergence"


RegularizerSpec = Annotated[
    Union[
        BhepRegularizer,
        KummerMmdRegularizer,
        SlicedMmdRegularizer,
        KsdRegularizer,
        SlicedKsdRegularizer,
        SlicedKsdAnalyticRegularizer,
        VmfMmdRegularizer,
        VmfKsdRegularizer,
    ],
    Field(discriminator="kind"),
]

SPHERE_REGULARIZERS = ("vmf-mmd", "vmf-ksd")


class FlowState(BaseModel):
    """Particles Z with the objective weights; rows are grouped into consecutive views of one instance."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    particles: SampleBatch
    views_per_particle: int = Field(default=1, ge=1)
    step: int = Field(default=0, ge=0)
    lam: float = Field(default=1.0, ge=0, alias="lambda")
    step_size: float = Field(default=0.05, gt=0)

    @field_validator("views_per_particle")
    @classmethod
    def _check_groups(cls, value, info):
        particles = info.data.get("particles")
        if particles is not None and particles.n % value:
            raise ValueError(f"{particles.n} particles cannot be split into groups of {value} views")
        return value
