import numpy as np

from ..config import logger
from ..exceptions import InvalidArgumentError
from .schemas import SampleBatch, DirectionSet, RngState


def standard_normal_rows(gen: np.random.Generator, rows: int, d: int) -> np.ndarray:
    """Standard normal rows with any all-zero row redrawn."""
    noise = gen.standard_normal((rows, d))
    norms = np.linalg.norm(noise, axis=1)
    while np.any(norms == 0.0):
        zero = norms == 0.0
        logger.warning(f"Redrawing {int(zero.sum())} zero Gaussian rows")
        noise[zero] = gen.standard_normal((int(zero.sum()), d))
        norms = np.linalg.norm(noise, axis=1)
    return noise


def uniform_sphere_rows(gen: np.random.Generator, rows: int, d: int) -> np.ndarray:
    noise = standard_normal_rows(gen, rows, d)
    return noise / np.linalg.norm(noise, axis=1, keepdims=True)


def sample_directions(m: int, d: int, rng: RngState) -> DirectionSet:
    if m < 1 or d < 1:
        raise InvalidArgumentError(f"sample_directions needs m >= 1 and d >= 1, got m={m}, d={d}")
    return DirectionSet(dirs=uniform_sphere_rows(rng.generator(), m, d))


def project(batch: SampleBatch, dirs: DirectionSet) -> np.ndarray:
    if batch.d != dirs.d:
        raise InvalidArgumentError(f"Cannot project d={batch.d} samples onto d={dirs.d} directions")
    return batch.data @ dirs.dirs.T
