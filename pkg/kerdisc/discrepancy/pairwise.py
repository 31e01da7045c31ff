from typing import Callable, Iterator, Tuple

import numpy as np

from ..config import BLOCK_SIZE

BlockFn = Callable[[int, int], np.ndarray]


def row_blocks(n: int, block: int = None) -> Iterator[Tuple[int, int]]:
    block = block or BLOCK_SIZE
    for start in range(0, n, block):
        yield start, min(start + block, n)


def zero_block_diagonal(values: np.ndarray, start: int) -> np.ndarray:
    """Zero the entries (i, start + i) of a row block of a square pair matrix."""
    rows = np.arange(values.shape[0])
    values[rows, start + rows] = 0.0
    return values


def pair_row_sums(block_fn: BlockFn, n: int, exclude_diagonal: bool) -> np.ndarray:
    """Row sums of an n x m pair matrix evaluated one row block at a time.

    ``block_fn(start, stop)`` returns rows start..stop of the matrix. Reductions run in a fixed
    order, so results do not depend on the block size beyond last-ulp effects.
    """
    sums = np.empty(n)
    for start, stop in row_blocks(n):
        values = block_fn(start, stop)
        if exclude_diagonal:
            values = zero_block_diagonal(values, start)
        sums[start:stop] = values.sum(axis=1)
    return sums

