from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class KummerMode(str, Enum):
    EXACT = "exact"
    IMQ_APPROX = "imq-approx"


class QuadratureRule(BaseModel):
    """Knots and probability weights integrating against the standard normal density."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    knots: np.ndarray
    weights: np.ndarray

    @field_validator("knots", "weights", mode="before")
    @classmethod
    def _as_vector(cls, value):
        arr = np.array(value, dtype=np.float64, copy=True).reshape(-1)
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("quadrature vectors must be non-empty and finite")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_rule(self):
        if self.knots.shape != self.weights.shape:
            raise ValueError("knots and weights differ in length")
        if np.any(self.weights <= 0.0):
            raise ValueError("weights must be strictly positive")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if np.any(np.diff(self.knots) <= 0.0):
            raise ValueError("knots must be strictly increasing")
        return self

    @property
    def size(self) -> int:
        return self.knots.size

    def frequencies(self, gamma: float) -> np.ndarray:
        """Knots mapped to frequencies of the Gaussian spectral density with bandwidth gamma."""
        return self.knots * np.sqrt(2.0 * gamma)
