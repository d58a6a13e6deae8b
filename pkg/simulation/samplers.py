from enum import Enum
from typing import List
import math

import numpy as np

from core.vectors import LatentVector
from utils.rng import SeededRng


class SamplerKind(str, Enum):
    UNIFORM = 'uniform'
    GAUSSIAN = 'gaussian'


class SigmaConvention(str, Enum):
    VARIANCE = 'variance'  # sigma^2 = 0.1 * C
    STDDEV = 'stddev'      # sigma = 0.1 * C


def gaussian_sigma(clip_constant: float,
                   convention: SigmaConvention = SigmaConvention.VARIANCE,
                   factor: float = 0.1) -> float:
    if SigmaConvention(convention) == SigmaConvention.VARIANCE:
        return math.sqrt(factor * clip_constant)
    return factor * clip_constant


def _check(n: int, count: int, clip_constant: float) -> None:
    if n < 1 or count < 1:
        raise ValueError(f"Need n >= 1 and count >= 1, got n={n}, count={count}")
    if clip_constant <= 0:
        raise ValueError(f"Clip constant must be positive, not {clip_constant}")


def uniform_matrix(n: int, count: int, clip_constant: float,
                   rng: SeededRng) -> np.ndarray:
    """
    (count, n) matrix with i.i.d. coordinates on the open interval (-C, C)
    """
    _check(n, count, clip_constant)
    u = rng.uniform_open((count, n))
    return clip_constant * (2.0 * u - 1.0)


def gaussian_matrix(n: int, count: int, clip_constant: float, rng: SeededRng,
                    convention: SigmaConvention = SigmaConvention.VARIANCE
                    ) -> np.ndarray:
    """
    (count, n) matrix of zero-centered normals, variance 0.1 * C by default
    """
    _check(n, count, clip_constant)
    return rng.normal(gaussian_sigma(clip_constant, convention), (count, n))


def sample_matrix(kind: SamplerKind, n: int, count: int, clip_constant: float,
                  rng: SeededRng,
                  convention: SigmaConvention = SigmaConvention.VARIANCE
                  ) -> np.ndarray:
    if SamplerKind(kind) == SamplerKind.UNIFORM:
        return uniform_matrix(n, count, clip_constant, rng)
    return gaussian_matrix(n, count, clip_constant, rng, convention)


def sample_uniform_latents(n: int, count: int, clip_constant: float,
                           rng: SeededRng) -> List[LatentVector]:
    return [LatentVector(row)
            for row in uniform_matrix(n, count, clip_constant, rng)]


def sample_gaussian_latents(
    n: int,
    count: int,
    clip_constant: float,
    rng: SeededRng,
    convention: SigmaConvention = SigmaConvention.VARIANCE
) -> List[LatentVector]:
    return [LatentVector(row)
            for row in gaussian_matrix(n, count, clip_constant, rng, convention)]
