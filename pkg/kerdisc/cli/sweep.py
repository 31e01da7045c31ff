from itertools import product
from typing import Dict, List, Optional, TextIO

import pandas as pd
from joblib import Parallel, delayed

from ..config import logger, KERDISC_THREADS
from ..core.schemas import RngState
from ..flow.objective import evaluate_regularizer
from ..priors.sampling import sample
from .schemas import SweepConfig

SWEEP_COLUMNS = ["dim", "slices", "seed", "rep", "value", "wall_ms"]


def sweep_grid(config: SweepConfig) -> List[Dict[str, int]]:
    """Grid points in output order: dims outermost, then slice counts, seeds and repetitions."""
    return [
        {"dim": dim, "slices": slices, "seed": seed, "rep": rep}
        for dim, slices, seed, rep in product(config.dims, config.slice_counts, config.seeds, range(config.repetitions))
    ]


def _run_point(config: SweepConfig, point: Dict[str, int]) -> Dict[str, float]:
    prior = config.prior.build(point["dim"])
    omega = config.estimator
    if "slices" in type(omega).model_fields:
        omega = omega.model_copy(update={"slices": point["slices"]})
    base = RngState(seed=point["seed"])
    batch = sample(prior, config.n, base.child(2 * point["rep"]))
    estimate = evaluate_regularizer(omega, prior, batch, base.child(2 * point["rep"] + 1))
    return {**point, "value": estimate.value, "wall_ms": estimate.wall_ms}


def run_sweep(config: SweepConfig, threads: Optional[int] = None) -> pd.DataFrame:
    """Evaluate the estimator on fresh prior draws at every grid point; rows keep grid order."""
    grid = sweep_grid(config)
    n_jobs = threads or KERDISC_THREADS
    logger.info(f"Running sweep: estimator={config.estimator.kind}, points={len(grid)}, n={config.n}, threads={n_jobs}")
    rows = Parallel(n_jobs=n_jobs)(delayed(_run_point)(config, point) for point in grid)
    return pd.DataFrame.from_records(rows, columns=SWEEP_COLUMNS)


def write_sweep(frame: pd.DataFrame, stream: TextIO) -> None:
    frame.to_csv(stream, index=False, float_format="%.17g")
