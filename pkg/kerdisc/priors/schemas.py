from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from ..config import DEFAULT_STUDENT_NU


class GaussianPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    sigma: float = Field(default=1.0, gt=0)
    d: int = Field(ge=1)


class LaplacePrior(BaseModel):
    """Isotropic Laplace with density proportional to exp(-|x| / sigma)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["laplace"] = "laplace"
    sigma: float = Field(default=1.0, gt=0)
    d: int = Field(ge=1)


class StudentTPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["student-t"] = "student-t"
    nu: float = Field(default=DEFAULT_STUDENT_NU, gt=2)
    sigma: float = Field(default=1.0, gt=0)
    d: int = Field(ge=1)


class UniformSpherePrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform-sphere"] = "uniform-sphere"
    d: int = Field(ge=1)


PriorSpec = Annotated[
    Union[GaussianPrior, LaplacePrior, StudentTPrior, UniformSpherePrior], Field(discriminator="kind")
]

PRIOR_CLASSES = {
    "gaussian": GaussianPrior,
    "laplace": LaplacePrior,
    "student-t": StudentTPrior,
    "uniform-sphere": UniformSpherePrior,
}


class PriorConfig(BaseModel):
    """Prior parameters without a dimension, for configs that sweep over d."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["gaussian", "laplace", "student-t", "uniform-sphere"] = "gaussian"
    sigma: float = Field(default=1.0, gt=0)
    nu: Optional[float] = Field(default=None, gt=2)

    def build(self, d: int):
        params = {"d": d}
        if self.kind != "uniform-sphere":
            params["sigma"] = self.sigma
        if self.kind == "student-t" and self.nu is not None:
            params["nu"] = self.nu
        return PRIOR_CLASSES[self.kind](**params)
