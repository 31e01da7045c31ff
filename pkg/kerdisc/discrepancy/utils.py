from typing import Optional
import time

import numpy as np

from ..config import logger, REPORT_EPS
from ..core.schemas import DiscrepancyEstimate
from ..exceptions import InvalidArgumentError, NumericalError


def check_form(form: str) -> str:
    if form not in ("U", "V"):
        raise InvalidArgumentError(f"form must be 'U' or 'V', got {form!r}")
    return form


def first_order_se(contributions: np.ndarray) -> float:
    """2 * sd(h_i) / sqrt(n), the leading-order standard error of a pairwise mean."""
    n = contributions.size
    if n < 2:
        return 0.0
    return float(2.0 * np.std(contributions, ddof=1) / np.sqrt(n))


def build_estimate(
    value: float,
    estimator: str,
    n: int,
    d: int,
    started: float,
    std_error: Optional[float] = None,
    form: str = "U",
    slices: int = 0,
    knots: int = 0,
    seed: int = 0,
) -> DiscrepancyEstimate:
    if not np.isfinite(value):
        logger.error(f"{estimator} produced a non-finite value for n={n}, d={d}")
        raise NumericalError(f"{estimator} produced a non-finite value (n={n}, d={d})")
    if form == "V" and value < -REPORT_EPS * (1.0 + abs(value)):
        logger.error(f"{estimator} V-form value {value:.6g} is negative for n={n}, d={d}")
        raise NumericalError(f"{estimator} V-form value {value:.6g} is negative (n={n}, d={d})")
    wall_ms = (time.perf_counter() - started) * 1e3
    logger.info(f"{estimator}: value={value:.6g}, n={n}, d={d}, slices={slices}, knots={knots}, wall_ms={wall_ms:.1f}")
    return DiscrepancyEstimate(
        value=float(value),
        estimator=estimator,
        n=n,
        d=d,
        slices=slices,
        knots=knots,
        seed=seed,
        wall_ms=wall_ms,
        std_error=std_error,
        form=form,
    )
