from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np


class DimensionMismatchError(ValueError):
    """Raised when two vectors (or a vector and a mechanism) disagree on n."""


class NormKind(str, Enum):
    L2 = 'l2'
    L1 = 'l1'


@dataclass(frozen=True, eq=False)
class LatentVector:
    """Dense, finite, read-only latent coordinates r in R^n."""

    components: np.ndarray

    def __post_init__(self):
        values = np.array(self.components, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError(
                f"Latent vector must be one-dimensional with dim >= 1, "
                f"got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Latent vector components must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'components', values)

    @classmethod
    def of(cls, *values: float) -> 'LatentVector':
        return cls(np.asarray(values, dtype=np.float64))

    @property
    def dim(self) -> int:
        return int(self.components.shape[0])

    def tolist(self) -> list:
        return self.components.tolist()

    def __len__(self) -> int:
        return self.dim

    def __sub__(self, other: 'LatentVector') -> 'LatentVector':
        ensure_same_dim(self, other)
        return LatentVector(self.components - other.components)

    def __neg__(self) -> 'LatentVector':
        return LatentVector(-self.components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentVector):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    __hash__ = None

    def __repr__(self) -> str:
        return f"LatentVector({self.tolist()})"


@dataclass(frozen=True)
class ClipSpec:
    norm_kind: NormKind
    clip_constant: float

    def __post_init__(self):
        object.__setattr__(self, 'norm_kind', NormKind(self.norm_kind))
        if not np.isfinite(self.clip_constant) or self.clip_constant <= 0:
            raise ValueError(
                f"Clip constant must be positive, not {self.clip_constant}")


def ensure_same_dim(first: LatentVector, second: LatentVector) -> None:
    if first.dim != second.dim:
        raise DimensionMismatchError(
            f"Dimension mismatch: {first.dim} vs {second.dim}")


def _as_array(v: Union[LatentVector, np.ndarray]) -> np.ndarray:
    return v.components if isinstance(v, LatentVector) else np.asarray(v)


# Norms over the last axis, shared by the single-vector and matrix paths.
# Rows whose plain norm overflows are recomputed after dividing by their
# largest magnitude; the result stays inf only if the norm itself does.
def _with_rescue(values: np.ndarray, plain) -> np.ndarray:
    with np.errstate(over='ignore'):
        sizes = plain(values)
        overflowed = np.isinf(sizes)
        if np.any(overflowed):
            peak = np.max(np.abs(values), axis=-1, keepdims=True)
            unit = values / np.where(peak > 0, peak, 1.0)
            sizes = np.where(overflowed, peak[..., 0] * plain(unit), sizes)
    return sizes


def _plain_l1(values: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(values), axis=-1)


def _plain_l2(values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.square(values), axis=-1))


def _l1(values: np.ndarray) -> np.ndarray:
    return _with_rescue(values, _plain_l1)


def _l2(values: np.ndarray) -> np.ndarray:
    return _with_rescue(values, _plain_l2)


_NORMS = {NormKind.L1: _l1, NormKind.L2: _l2}


def l1_norm(v: Union[LatentVector, np.ndarray]) -> float:
    return float(_l1(_as_array(v)))


def l2_norm(v: Union[LatentVector, np.ndarray]) -> float:
    return float(_l2(_as_array(v)))


def norm(v: Union[LatentVector, np.ndarray], kind: NormKind) -> float:
    return float(_NORMS[NormKind(kind)](_as_array(v)))


def l1_distance(x: LatentVector, y: LatentVector) -> float:
    ensure_same_dim(x, y)
    return float(_l1(x.components - y.components))


def _scale_into_ball(values: np.ndarray, size: float, bound: float,
                     norm_fn) -> np.ndarray:
    if not np.isfinite(size):
        # norm above the float range; shrink to a unit peak first
        values = values / np.max(np.abs(values))
        size = float(norm_fn(values))
    factor = bound / size
    scaled = values * factor
    # rounding can leave the scaled norm an ulp above the bound
    while norm_fn(scaled) > bound:
        factor = np.nextafter(factor, 0.0)
        scaled = values * factor
    return scaled


def clip(v: LatentVector, spec: ClipSpec) -> LatentVector:
    """
    Scale v by min(1, C / ||v||_p).

    Vectors already inside the ball (including the zero vector) are returned
    as the same object; otherwise the output norm is at most C exactly.
    """
    norm_fn = _NORMS[spec.norm_kind]
    size = float(norm_fn(v.components))
    if size <= spec.clip_constant:
        return v
    return LatentVector(_scale_into_ball(
        v.components, size, spec.clip_constant, norm_fn))


def clip_rows(matrix: np.ndarray, spec: ClipSpec) -> np.ndarray:
    """
    Clip every row of an (m, n) matrix; row-wise identical to clip().
    """
    norm_fn = _NORMS[spec.norm_kind]
    bound = spec.clip_constant
    source = np.asarray(matrix, dtype=np.float64)
    clipped = source.copy()
    sizes = norm_fn(clipped)
    outside = np.flatnonzero(sizes > bound)
    if outside.size:
        factors = bound / sizes[outside]
        clipped[outside] = source[outside] * factors[:, None]
        over = outside[~np.isfinite(sizes[outside]) |
                       (norm_fn(clipped[outside]) > bound)]
        for row in over:
            clipped[row] = _scale_into_ball(
                source[row], float(sizes[row]), bound, norm_fn)
    return clipped


def reverse_triangle_gap(a: float, x: float, y: float) -> float:
    """
    |x - y| - (|x - a| - |y - a|), non-negative for all reals a, x, y.
    """
    return abs(x - y) - (abs(x - a) - abs(y - a))
