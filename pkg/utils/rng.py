"""Seeded, platform-independent random streams.

Every stream is a numpy ``Generator`` over PCG64 seeded from a
``SeedSequence(entropy=seed, spawn_key=key)``. Child streams append an index
to the spawn key, so stream ``(seed, (d, i))`` is the same on every machine and
independent of how many sibling streams were created before it.
"""

from typing import Optional, Tuple

import numpy as np


class SeededRng:
    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2**64:
            raise ValueError(
                f"Seed must be an unsigned 64-bit integer, not {seed!r}")
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=self.seed,
                                   spawn_key=self.spawn_key)
        ))
        self.position = 0  # scalar draws consumed so far

    def stream(self, index: int) -> 'SeededRng':
        """Independent child stream for vector (or chunk, or dim) ``index``."""
        if index < 0:
            raise ValueError(f"Stream index must be non-negative, not {index}")
        return SeededRng(self.seed, self.spawn_key + (index,))

    def uniform_open(self, size: Optional[Tuple[int, ...]] = None) -> np.ndarray:
        """Uniform draws on the open interval (0, 1)."""
        values = np.atleast_1d(self.generator.random(size))
        self.position += values.size
        zeros = values == 0.0
        while np.any(zeros):
            values[zeros] = self.generator.random(int(zeros.sum()))
            self.position += int(zeros.sum())
            zeros = values == 0.0
        return values if size is not None else values[0]

    def normal(self, scale: float, size: Tuple[int, ...]) -> np.ndarray:
        values = self.generator.normal(0.0, scale, size)
        self.position += values.size
        return values

    def integers(self, high: int, size: int, replace: bool = False) -> np.ndarray:
        values = self.generator.choice(high, size=size, replace=replace)
        self.position += size
        return np.asarray(values, dtype=np.int64)

    def __repr__(self) -> str:
        return (f"SeededRng(seed={self.seed}, spawn_key={self.spawn_key}, "
                f"position={self.position})")
