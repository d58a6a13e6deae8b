from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence
import logging
import math

import numpy as np

from core.vectors import (
    ClipSpec, DimensionMismatchError, LatentVector, NormKind, clip, ensure_same_dim
)
from mechanisms.laplace import laplace_log_density, sample_laplace
from utils.rng import SeededRng


logger = logging.getLogger(__name__)


class ScaleMode(str, Enum):
    CLAIMED_ADEPT = 'claimed-adept'
    CORRECTED_RESCALED = 'corrected-rescaled'
    CORRECTED_L1_CLIP = 'corrected-l1clip'


# Which result each mode's calibration rests on, quoted in every report
MODE_NOTES = {
    ScaleMode.CLAIMED_ADEPT:
        "NOT ε-DP (the ADePT privacy claim is false): L2 clip calibrated to "
        "the refuted sensitivity 2C",
    ScaleMode.CORRECTED_RESCALED:
        "ε-DP: L2 clip with noise calibrated to the true sensitivity 2C√n",
    ScaleMode.CORRECTED_L1_CLIP:
        "ε-DP: L1 clip, whose L1 diameter is 2C, with noise scale 2C/ε",
}


@dataclass(frozen=True)
class MechanismSpec:
    clip: ClipSpec
    epsilon: float
    scale_mode: ScaleMode
    claimed_sensitivity: float
    noise_scale: float
    dim: Optional[int] = None  # set when the calibration depends on n

    def __post_init__(self):
        object.__setattr__(self, 'scale_mode', ScaleMode(self.scale_mode))
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ValueError(f"Epsilon must be positive, not {self.epsilon}")
        if self.claimed_sensitivity <= 0 or self.noise_scale <= 0:
            raise ValueError("Sensitivity and noise scale must be positive")
        expected_norm = (NormKind.L1 if self.scale_mode ==
                         ScaleMode.CORRECTED_L1_CLIP else NormKind.L2)
        if self.clip.norm_kind != expected_norm:
            raise ValueError(
                f"Mode {self.scale_mode.value} requires {expected_norm.value} "
                f"clipping, got {self.clip.norm_kind.value}")
        if self.scale_mode == ScaleMode.CORRECTED_RESCALED and self.dim is None:
            raise ValueError("corrected-rescaled mode needs the dimension n")
        if self.dim is not None and self.dim < 1:
            raise ValueError(f"Dimension must be >= 1, not {self.dim}")
        if not math.isclose(self.noise_scale,
                            self.claimed_sensitivity / self.epsilon,
                            rel_tol=1e-12):
            raise ValueError("Noise scale must equal claimed sensitivity / ε")

    @classmethod
    def build(
        cls,
        mode: str,
        clip_constant: float,
        epsilon: float,
        dim: Optional[int] = None
    ) -> 'MechanismSpec':
        """
        Calibrate a mechanism the way its mode prescribes
        """
        mode = ScaleMode(mode)
        if epsilon <= 0:
            raise ValueError(f"Epsilon must be positive, not {epsilon}")
        if mode == ScaleMode.CORRECTED_RESCALED:
            if dim is None or dim < 1:
                raise ValueError(
                    "corrected-rescaled mode needs a dimension n >= 1")
            sensitivity = 2.0 * clip_constant * math.sqrt(dim)
            norm_kind = NormKind.L2
        else:
            sensitivity = 2.0 * clip_constant
            norm_kind = (NormKind.L1 if mode == ScaleMode.CORRECTED_L1_CLIP
                         else NormKind.L2)
        return cls(
            clip=ClipSpec(norm_kind, clip_constant),
            epsilon=epsilon,
            scale_mode=mode,
            claimed_sensitivity=sensitivity,
            noise_scale=sensitivity / epsilon,
            dim=dim if mode == ScaleMode.CORRECTED_RESCALED else None
        )

    @property
    def is_private(self) -> bool:
        return self.scale_mode != ScaleMode.CLAIMED_ADEPT

    @property
    def note(self) -> str:
        return MODE_NOTES[self.scale_mode]

    def check_dim(self, dim: int) -> None:
        if self.dim is not None and self.dim != dim:
            raise DimensionMismatchError(
                f"Mechanism calibrated for n={self.dim}, got a vector of dim {dim}")

    def to_dict(self) -> dict:
        return {
            'mode': self.scale_mode.value,
            'norm': self.clip.norm_kind.value,
            'clip_constant': self.clip.clip_constant,
            'epsilon': self.epsilon,
            'claimed_sensitivity': self.claimed_sensitivity,
            'noise_scale': self.noise_scale,
            'dim': self.dim,
            'note': self.note,
        }


def privatize(r: LatentVector, spec: MechanismSpec, rng: SeededRng) -> LatentVector:
    """
    clip(r) + eta with eta_i ~ Lap(0, b) drawn independently per coordinate
    """
    spec.check_dim(r.dim)
    clipped = clip(r, spec.clip)
    noise = sample_laplace(0.0, spec.noise_scale, rng, size=r.dim)
    return LatentVector(clipped.components + noise)


def privatize_batch(
    vectors: Sequence[LatentVector],
    spec: MechanismSpec,
    rng: SeededRng
) -> List[LatentVector]:
    """
    Privatize many vectors; vector k always uses child stream k of rng.
    """
    outputs = []
    for index, r in enumerate(vectors):
        try:
            outputs.append(privatize(r, spec, rng.stream(index)))
        except Exception as e:
            logger.error(f"Error privatizing vector {index}: {e}")
            raise
    return outputs


def mechanism_log_density(spec: MechanismSpec, r: LatentVector,
                          z: LatentVector) -> float:
    """
    log p(M(r) = z) = sum_i [log(ε / 2Δf) - ε |f(r)_i - z_i| / Δf]

    Δf is the mechanism's claimed sensitivity, f the mechanism's clip.
    """
    ensure_same_dim(r, z)
    spec.check_dim(r.dim)
    scale = spec.claimed_sensitivity / spec.epsilon
    fr = clip(r, spec.clip).components
    return float(np.sum(laplace_log_density(z.components, fr, scale)))
