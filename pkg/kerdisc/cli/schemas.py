from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import DEFAULT_GAMMA
from ..flow.schemas import RegularizerSpec
from ..priors.schemas import PriorConfig
from ..specfun.schemas import KummerMode

METRICS = (
    "mmd-u",
    "mmd-cf",
    "bhep",
    "kummer-mmd",
    "ksd",
    "ksd-spectral",
    "sliced-mmd",
    "sliced-ksd",
    "sliced-ksd-analytic",
    "vmf-mmd",
    "vmf-ksd",
)
SLICED_METRICS = ("sliced-mmd", "sliced-ksd")
KNOT_METRICS = ("mmd-cf", "ksd-spectral", "sliced-mmd", "sliced-ksd")
V_ONLY_METRICS = ("mmd-cf", "ksd-spectral", "sliced-mmd", "sliced-ksd")
KERNEL_CHOICES = {
    "mmd-u": ("gaussian", "imq", "vmf"),
    "ksd": ("gaussian", "imq"),
    "vmf-mmd": ("gaussian", "vmf"),
    "vmf-ksd": ("gaussian", "vmf"),
}
MODE_METRICS = ("kummer-mmd", "sliced-ksd-analytic")


class EstimateArgs(BaseModel):
    """Flags of the ``estimate`` command."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    metric: Literal[METRICS]
    input: Path
    input2: Optional[Path] = None
    kernel: Literal["gaussian", "imq", "vmf"] = "gaussian"
    prior: Literal["gaussian", "laplace", "student-t", "uniform-sphere"] = "gaussian"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    sigma: float = Field(default=1.0, gt=0)
    nu: Optional[float] = Field(default=None, gt=2)
    alpha: float = Field(default=1.0, gt=0)
    beta: float = Field(default=0.5, gt=0)
    kappa: float = Field(default=1.0, gt=0)
    slices: Optional[int] = Field(default=None, ge=1)
    knots: Optional[int] = Field(default=None, ge=1, le=256)
    seed: int = Field(default=0, ge=0)
    form: Optional[Literal["U", "V"]] = None
    mode: KummerMode = KummerMode.EXACT

    @model_validator(mode="after")
    def _check_flags(self):
        if self.slices is not None and self.metric not in SLICED_METRICS:
            raise ValueError(f"--slices does not apply to {self.metric}")
        if self.knots is not None and self.metric not in KNOT_METRICS:
            raise ValueError(f"--knots does not apply to {self.metric}")
        if self.kernel not in KERNEL_CHOICES.get(self.metric, ("gaussian",)):
            raise ValueError(f"--kernel {self.kernel} does not apply to {self.metric}")
        if self.mode is not KummerMode.EXACT and self.metric not in MODE_METRICS:
            raise ValueError(f"--mode {self.mode.value} does not apply to {self.metric}")
        if (self.input2 is not None) != (self.metric == "mmd-u"):
            raise ValueError("--input2 is required by mmd-u and accepted by no other metric")
        if self.form == "U" and self.metric in V_ONLY_METRICS:
            raise ValueError(f"{self.metric} is only defined in V-form")
        if self.metric.startswith("vmf-") and self.prior != "uniform-sphere":
            raise ValueError(f"{self.metric} needs --prior uniform-sphere")
        return self

    @property
    def resolved_form(self) -> str:
        if self.form is not None:
            return self.form
        return "V" if self.metric in V_ONLY_METRICS else "U"

    def prior_config(self) -> PriorConfig:
        return PriorConfig(kind=self.prior, sigma=self.sigma, nu=self.nu)


class SweepConfig(BaseModel):
    """Grid of a slice/dimension sweep; one row per (dim, slices, seed, repetition)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dims: List[int]
    slice_counts: List[int]
    seeds: List[int]
    n: int = Field(default=256, ge=2)
    estimator: RegularizerSpec
    prior: PriorConfig = Field(default_factory=PriorConfig)
    repetitions: int = Field(default=1, ge=1)

    @field_validator("dims", "slice_counts", "seeds")
    @classmethod
    def _non_empty(cls, value, info):
        if not value:
            raise ValueError(f"{info.field_name} must not be empty")
        if any(v < (0 if info.field_name == "seeds" else 1) for v in value):
            raise ValueError(f"{info.field_name} has an out-of-range entry")
        return value


class FlowConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    init: Literal["collapsed", "gaussian", "sphere-cluster"] = "collapsed"
    n: int = Field(default=256, ge=2)
    d: int = Field(default=4, ge=1)
    estimator: RegularizerSpec
    prior: PriorConfig = Field(default_factory=PriorConfig)
    steps: int = Field(ge=1)
    step_size: float = Field(default=0.05, gt=0)
    lam: float = Field(default=1.0, ge=0, alias="lambda")
    views_per_particle: int = Field(default=1, ge=1)
    view_noise: float = Field(default=0.0, ge=0)
    view_jitter: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0)
    log_every: Optional[int] = Field(default=None, ge=1)
