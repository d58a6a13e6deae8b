from typing import Optional, Union
import math

import numpy as np

from utils.rng import SeededRng


def _check_scale(b: float) -> None:
    if not np.isfinite(b) or b <= 0:
        raise ValueError(f"Scale `b` should be positive and finite, not {b}")


def laplace_density(t: float, mu: float, b: float) -> float:
    """
    Lap(t; mu, b) = 1/(2b) * exp(-|mu - t| / b)
    """
    _check_scale(b)
    return math.exp(-abs(mu - t) / b) / (2.0 * b)


def laplace_log_density(t: Union[float, np.ndarray], mu: Union[float, np.ndarray],
                        b: float) -> Union[float, np.ndarray]:
    _check_scale(b)
    return -math.log(2.0 * b) - np.abs(np.asarray(mu) - np.asarray(t)) / b


def laplace_inverse_cdf(u: Union[float, np.ndarray], mu: float, b: float
                        ) -> Union[float, np.ndarray]:
    """
    Inverse CDF of Lap(mu, b) at p = u + 1/2, for u in (-1/2, 1/2).
    """
    u = np.asarray(u, dtype=np.float64)
    return mu - b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(
    mu: float,
    b: float,
    rng: SeededRng,
    size: Optional[int] = None
) -> Union[float, np.ndarray]:
    """
    Draws from Lap(mu, b) by the inverse-CDF transform of one uniform each.

    Args:
        mu: Location. Must be finite.
        b: Scale. Must be positive and finite.
        rng: Stream the uniforms are taken from.
        size: Number of draws; a single float when omitted.
    """
    _check_scale(b)
    if not np.isfinite(mu):
        raise ValueError(f"Location `mu` should be finite, not {mu}")
    u = rng.uniform_open(size) - 0.5
    draws = laplace_inverse_cdf(u, mu, b)
    return float(draws) if size is None else draws
