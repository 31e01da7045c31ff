from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import DEFAULT_GAMMA
from ..specfun.schemas import KummerMode


class GaussianKernel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)


class ImqKernel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["imq"] = "imq"
    alpha: float = Field(default=1.0, gt=0)
    beta: float = Field(default=0.5, gt=0)


class KummerKernel(BaseModel):
    """Direction-averaged Gaussian kernel M(1/2; d/2; -gamma r^2)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["kummer"] = "kummer"
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    d: int = Field(ge=1)
    mode: KummerMode = KummerMode.EXACT

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode is KummerMode.IMQ_APPROX and self.d < 4:
            raise ValueError(f"ImqApprox needs d >= 4, got d={self.d}")
        return self


class VmfKernel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["vmf"] = "vmf"
    kappa: float = Field(default=1.0, gt=0)


KernelSpec = Annotated[Union[GaussianKernel, ImqKernel, KummerKernel, VmfKernel], Field(discriminator="kind")]
RadialKernel = Union[GaussianKernel, ImqKernel, KummerKernel]
