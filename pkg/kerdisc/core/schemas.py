from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Literal, Optional
import numpy as np

from ..config import SPHERE_NORM_ATOL, DIRECTION_NORM_ATOL, REPORT_EPS

MAX_U64 = 2**64 - 1


def _frozen_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {arr.ndim} dimensions")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


class SampleBatch(BaseModel):
    """n points in R^d, one per row. ``on_sphere`` marks batches constrained to S^{d-1}."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    on_sphere: bool = False

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, value):
        return _frozen_matrix(value)

    @model_validator(mode="after")
    def _check_sphere(self):
        if self.on_sphere:
            norms = np.linalg.norm(self.data, axis=1)
            worst = float(np.max(np.abs(norms - 1.0)))
            if worst > SPHERE_NORM_ATOL:
                raise ValueError(f"sphere batch has a row norm off by {worst:.3e}")
        return self

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


class DirectionSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dirs: np.ndarray

    @field_validator("dirs", mode="before")
    @classmethod
    def _check_dirs(cls, value):
        arr = _frozen_matrix(value)
        worst = float(np.max(np.abs(np.linalg.norm(arr, axis=1) - 1.0)))
        if worst > DIRECTION_NORM_ATOL:
            raise ValueError(f"direction norm off by {worst:.3e}")
        return arr

    @property
    def m(self) -> int:
        return self.dirs.shape[0]

    @property
    def d(self) -> int:
        return self.dirs.shape[1]


class RngState(BaseModel):
    """Seed plus stream id; each (seed, stream) pair is an independent reproducible generator."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=0, ge=0, le=MAX_U64)
    stream: int = Field(default=0, ge=0, le=MAX_U64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream,))))

    def child(self, index: int) -> "RngState":
        return RngState(seed=self.seed, stream=(self.stream * 1_000_003 + index + 1) % (MAX_U64 + 1))


class DiscrepancyEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    estimator: str
    n: int = Field(ge=0)
    d: int = Field(ge=0)
    slices: int = Field(default=0, ge=0)
    knots: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0, le=MAX_U64)
    wall_ms: float = 0.0
    std_error: Optional[float] = None
    form: Literal["U", "V"] = "U"

    @model_validator(mode="after")
    def _check_value(self):
        if not np.isfinite(self.value):
            raise ValueError(f"{self.estimator} produced a non-finite value")
        if self.form == "V" and self.value < -REPORT_EPS * (1.0 + abs(self.value)):
            raise ValueError(f"{self.estimator} V-form value {self.value} is negative")
        return self
