"""Blocked all-pairs L1 scanning over the rows of a dense matrix.

Row blocks [i0, i1) are compared against every later row with
``scipy.spatial.distance.cdist(..., 'cityblock')`` so the full m x m distance
matrix is never held in memory. Blocks run on a thread pool and merge by
addition / max with lexicographic tie-breaks, so results do not depend on the
worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple
import logging

import numpy as np
from scipy.spatial.distance import cdist


logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass
class PairCount:
    pairs_checked: int
    violations: int
    first_witness: Optional[Pair] = None


@dataclass
class PairMaximum:
    distance: float
    pair: Pair


def total_pairs(m: int) -> int:
    return m * (m - 1) // 2


def _blocks(m: int, block_rows: int) -> Iterator[Tuple[int, int]]:
    for start in range(0, m - 1, block_rows):
        yield start, min(start + block_rows, m - 1)


def _block_distances(matrix: np.ndarray, start: int, stop: int
                     ) -> Tuple[np.ndarray, np.ndarray]:
    # column k of the block is row start + 1 + k; pair (i, j) is valid iff j > i
    distances = cdist(matrix[start:stop], matrix[start + 1:], 'cityblock')
    rows = np.arange(stop - start)[:, None]
    cols = np.arange(distances.shape[1])[None, :]
    return distances, cols >= rows


def _map_blocks(fn, m: int, block_rows: int, workers: int) -> List:
    blocks = list(_blocks(m, block_rows))
    if workers <= 1 or len(blocks) <= 1:
        return [fn(*block) for block in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda block: fn(*block), blocks))


def count_pairs_above(
    matrix: np.ndarray,
    threshold: float,
    workers: int = 1,
    block_rows: int = 256
) -> PairCount:
    """
    Count the unordered row pairs whose L1 distance is strictly above threshold
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    m = matrix.shape[0]

    def scan(start: int, stop: int) -> PairCount:
        distances, valid = _block_distances(matrix, start, stop)
        above = distances > threshold
        above &= valid
        del distances

        # Count in place; the first True in row-major order is the witness
        hits = int(np.count_nonzero(above))
        witness = None
        if hits:
            row, col = np.unravel_index(int(np.argmax(above)), above.shape)
            witness = (start + int(row), start + 1 + int(col))
        logger.debug(f"Scanned rows {start}-{stop}: {hits} above threshold")
        return PairCount(int(np.count_nonzero(valid)), hits, witness)

    partial = _map_blocks(scan, m, block_rows, workers)
    witnesses = [p.first_witness for p in partial if p.first_witness]
    return PairCount(
        pairs_checked=sum(p.pairs_checked for p in partial),
        violations=sum(p.violations for p in partial),
        first_witness=min(witnesses) if witnesses else None
    )


def max_pair_distance(
    matrix: np.ndarray,
    workers: int = 1,
    block_rows: int = 256
) -> PairMaximum:
    """
    Largest pairwise L1 distance and the first (i, j) attaining it
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    m = matrix.shape[0]
    if m < 2:
        raise ValueError("At least two vectors are needed for a pair maximum")

    def scan(start: int, stop: int) -> PairMaximum:
        distances, valid = _block_distances(matrix, start, stop)
        distances = np.where(valid, distances, -np.inf)
        row, col = np.unravel_index(np.argmax(distances), distances.shape)
        return PairMaximum(float(distances[row, col]),
                           (start + int(row), start + 1 + int(col)))

    partial = _map_blocks(scan, m, block_rows, workers)
    return max(partial, key=lambda p: (p.distance, -p.pair[0], -p.pair[1]))


def pair_from_index(k: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map linear indices of the strict upper triangle (row-major) to (i, j).
    """
    k = np.asarray(k, dtype=np.int64)
    i = m - 2 - np.floor(
        np.sqrt(-8.0 * k + 4.0 * m * (m - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    # float rounding near row boundaries; snap to the row that owns k
    row_start = i * m - i * (i + 1) // 2
    i = np.where(k < row_start, i - 1, i)
    row_start = i * m - i * (i + 1) // 2
    next_start = (i + 1) * m - (i + 1) * (i + 2) // 2
    i = np.where(k >= next_start, i + 1, i)
    row_start = i * m - i * (i + 1) // 2
    j = k - row_start + i + 1
    return i, j


def count_listed_pairs_above(
    matrix: np.ndarray,
    first: np.ndarray,
    second: np.ndarray,
    threshold: float,
    chunk: int = 65536
) -> PairCount:
    """
    Same as count_pairs_above but only over the listed (first[k], second[k])
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    violations = 0
    witness = None
    for start in range(0, len(first), chunk):
        i = first[start:start + chunk]
        j = second[start:start + chunk]
        distances = np.sum(np.abs(matrix[i] - matrix[j]), axis=1)
        hit = distances > threshold
        violations += int(hit.sum())
        if hit.any():
            order = np.lexsort((j[hit], i[hit]))
            candidate = (int(i[hit][order[0]]), int(j[hit][order[0]]))
            witness = candidate if witness is None else min(witness, candidate)
    return PairCount(len(first), violations, witness)
