from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from core.pairwise import max_pair_distance
from core.vectors import (
    ClipSpec, LatentVector, NormKind, clip_rows, l1_distance, l2_norm
)
from simulation.samplers import SamplerKind, SigmaConvention, sample_matrix
from utils.rng import SeededRng


CLAIMED_LABEL = "claimed (refuted)"
L1_CLIP_LABEL = "claimed (correct for the L1 clip)"


@dataclass(frozen=True)
class SensitivityValue:
    value: float
    label: str


@dataclass
class SensitivityReport:
    dim: int
    clip_constant: float
    claimed: float
    true_analytic: float
    empirical_max: float
    witness_pair: Tuple[LatentVector, LatentVector]
    samples_used: int
    norm_kind: NormKind = NormKind.L2
    tolerance: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        if self.empirical_max > self.true_analytic + self.tolerance:
            raise ValueError(
                f"Empirical sensitivity {self.empirical_max} exceeds the "
                f"analytic bound {self.true_analytic}")
        if (self.norm_kind == NormKind.L2 and self.dim == 1
                and self.claimed != self.true_analytic):
            raise ValueError("For n = 1 the claimed and true sensitivity agree")

    @property
    def factor(self) -> float:
        return self.true_analytic / self.claimed

    @property
    def claimed_label(self) -> str:
        # 2C is exactly the L1 diameter of the L1 ball
        if self.norm_kind == NormKind.L1:
            return L1_CLIP_LABEL
        return CLAIMED_LABEL

    def to_dict(self) -> Dict:
        return {
            'dim': self.dim,
            'norm': NormKind(self.norm_kind).value,
            'clip_constant': self.clip_constant,
            'claimed': self.claimed,
            'claimed_label': self.claimed_label,
            'true_analytic': self.true_analytic,
            'factor': self.factor,
            'empirical_max': self.empirical_max,
            'witness_pair': [v.tolist() for v in self.witness_pair],
            'samples_used': self.samples_used,
        }


def _check_clip(C: float) -> None:
    if not np.isfinite(C) or C <= 0:
        raise ValueError(f"Clip constant must be positive, not {C}")


def _check_dim(n: int) -> None:
    if n < 1:
        raise ValueError(f"Dimension must be >= 1, not {n}")


def claimed_sensitivity(C: float) -> SensitivityValue:
    """
    The refuted claim: the L1 diameter of the L2 ball of radius C is 2C
    """
    _check_clip(C)
    return SensitivityValue(2.0 * C, CLAIMED_LABEL)


def true_sensitivity_l2clip(C: float, n: int) -> float:
    _check_clip(C)
    _check_dim(n)
    return 2.0 * C * math.sqrt(n)


def sensitivity_l1clip(C: float) -> float:
    """L1 diameter of the L1 ball of radius C."""
    _check_clip(C)
    return 2.0 * C


def analytic_sensitivity(spec: ClipSpec, n: int) -> float:
    if spec.norm_kind == NormKind.L1:
        return sensitivity_l1clip(spec.clip_constant)
    return true_sensitivity_l2clip(spec.clip_constant, n)


def extremal_pair(C: float, n: int) -> Tuple[LatentVector, LatentVector]:
    """
    Antipodal hypercube corners (-C/sqrt(n), ...) and (+C/sqrt(n), ...).

    The corner coordinate is nudged down by ulps until the L2 norm is at most
    C, so both vectors are fixed points of the L2 clip.
    """
    _check_clip(C)
    _check_dim(n)
    corner = C / math.sqrt(n)
    while l2_norm(np.full(n, corner)) > C:
        corner = float(np.nextafter(corner, 0.0))
    upper = LatentVector(np.full(n, corner))
    return -upper, upper


def l1_ball_vertices(C: float, n: int) -> Tuple[LatentVector, LatentVector]:
    _check_clip(C)
    _check_dim(n)
    vertex = np.zeros(n)
    vertex[0] = C
    upper = LatentVector(vertex)
    return -upper, upper


def counterexample_pair(C: float) -> Tuple[LatentVector, LatentVector]:
    """
    r_x = (-2C/3, -2C/3), r_y = (2C/3, 2C/3): both inside the L2 ball, yet
    their L1 distance 8C/3 exceeds the claimed 2C.
    """
    _check_clip(C)
    a = 2.0 * C / 3.0
    return LatentVector.of(-a, -a), LatentVector.of(a, a)


def effective_epsilon(epsilon_claimed: float, delta_f_claimed: float,
                      delta_f_true: float) -> float:
    """
    Worst-case privacy level delivered by Laplace noise calibrated to a
    claimed sensitivity when the true one is delta_f_true.
    """
    if min(epsilon_claimed, delta_f_claimed, delta_f_true) <= 0:
        raise ValueError("Epsilon and sensitivities must be positive")
    return epsilon_claimed * delta_f_true / delta_f_claimed


class SensitivityAnalyzer:
    def __init__(self, config: Dict):
        self.oracle_max_dim = config.get('oracle_max_dim', 16)
        self.oracle_min_trials = config.get('oracle_min_trials', 10_000)
        self.oracle_chunk_size = config.get('oracle_chunk_size', 8192)
        self.ascent_steps = config.get('ascent_steps', 64)
        self.tolerance = config.get('distance_tolerance', 1e-9)
        self.factor_dims = config.get(
            'factor_dims', [32, 64, 128, 256, 512, 1024])
        self.block_rows = config.get('block_rows', 256)
        self.workers = config.get('workers', 1)
        self.logger = logging.getLogger(__name__)

    def analytic_report(self, spec: ClipSpec, n: int) -> SensitivityReport:
        """
        Report with the analytic witness pair as the only evidence
        """
        if spec.norm_kind == NormKind.L1:
            witness = l1_ball_vertices(spec.clip_constant, n)
        else:
            witness = extremal_pair(spec.clip_constant, n)
        return SensitivityReport(
            dim=n,
            clip_constant=spec.clip_constant,
            claimed=claimed_sensitivity(spec.clip_constant).value,
            true_analytic=analytic_sensitivity(spec, n),
            empirical_max=l1_distance(*witness),
            witness_pair=witness,
            samples_used=0,
            norm_kind=spec.norm_kind,
            tolerance=self.tolerance
        )

    def empirical_sensitivity(
        self,
        spec: ClipSpec,
        n: int,
        sampler: SamplerKind,
        num_vectors: int,
        seed: int,
        include: Optional[Sequence[LatentVector]] = None,
        convention: SigmaConvention = SigmaConvention.VARIANCE
    ) -> SensitivityReport:
        """
        Monte Carlo estimate of the L1 sensitivity of clip over sampled latents.

        ``include`` vectors are prepended to the sample (e.g. a known witness).
        """
        if num_vectors < 2:
            raise ValueError(f"Need at least two vectors, got {num_vectors}")
        _check_dim(n)
        try:
            # Nested sample: one stream per dimension
            rng = SeededRng(seed).stream(n)
            matrix = sample_matrix(sampler, n, num_vectors, spec.clip_constant,
                                   rng, convention)
            if include:
                extra = np.vstack([v.components for v in include])
                if extra.shape[1] != n:
                    raise ValueError(
                        f"Included vectors have dim {extra.shape[1]}, expected {n}")
                matrix = np.vstack([extra, matrix])

            # Clip every row, then scan all pairs for the largest distance
            clipped = clip_rows(matrix, spec)
            best = max_pair_distance(clipped, self.workers, self.block_rows)
            i, j = best.pair
            self.logger.info(
                f"Empirical sensitivity n={n} over {matrix.shape[0]} vectors: "
                f"{best.distance:.6f} at pair ({i}, {j})")

            return SensitivityReport(
                dim=n,
                clip_constant=spec.clip_constant,
                claimed=claimed_sensitivity(spec.clip_constant).value,
                true_analytic=analytic_sensitivity(spec, n),
                empirical_max=best.distance,
                witness_pair=(LatentVector(clipped[i]), LatentVector(clipped[j])),
                samples_used=matrix.shape[0],
                norm_kind=spec.norm_kind,
                tolerance=self.tolerance
            )

        except Exception as e:
            self.logger.error(f"Error in empirical sensitivity: {e}")
            raise

    def brute_force_max_l1_on_sphere(self, C: float, n: int, trials: int,
                                     seed: int) -> float:
        """
        Search for the largest L1 distance between two points of the L2 sphere
        of radius C: random pairs, then sign-aligned projected ascent on the
        best pair found.
        """
        _check_clip(C)
        if not 1 <= n <= self.oracle_max_dim:
            raise ValueError(
                f"Oracle supports 1 <= n <= {self.oracle_max_dim}, got {n}")
        if trials < self.oracle_min_trials:
            raise ValueError(
                f"Oracle needs at least {self.oracle_min_trials} trials, got {trials}")

        # Random search over pairs of sphere points, one stream per chunk
        root = SeededRng(seed)
        best_distance = -np.inf
        best_pair = None
        for chunk, start in enumerate(range(0, trials, self.oracle_chunk_size)):
            size = min(self.oracle_chunk_size, trials - start)
            rng = root.stream(chunk)
            x = self._on_sphere(rng.normal(1.0, (size, n)), C)
            y = self._on_sphere(rng.normal(1.0, (size, n)), C)
            distances = np.sum(np.abs(x - y), axis=1)
            k = int(np.argmax(distances))
            if distances[k] > best_distance:
                best_distance = float(distances[k])
                best_pair = (x[k], y[k])

        # Refine the best random pair by projected ascent
        x, y = best_pair
        ascended = self._coordinate_ascent(x, y, C)
        self.logger.debug(
            f"Oracle n={n}: random search {best_distance:.9f}, "
            f"after ascent {ascended:.9f}")
        return max(best_distance, ascended)

    @staticmethod
    def _on_sphere(points: np.ndarray, C: float) -> np.ndarray:
        norms = np.sqrt(np.sum(np.square(points), axis=-1, keepdims=True))
        norms[norms == 0] = 1.0
        return C * (points / norms)

    def _coordinate_ascent(self, x: np.ndarray, y: np.ndarray, C: float) -> float:
        """
        Push x along sign(x - y) and y against it, re-projecting both onto the
        sphere after every step; keep the best distance seen.
        """
        best = float(np.sum(np.abs(x - y)))
        step = 2.0 * C
        for _ in range(self.ascent_steps):
            direction = np.sign(x - y)
            direction[direction == 0] = 1.0
            x_next = self._on_sphere(x + step * direction, C)
            y_next = self._on_sphere(y - step * direction, C)
            distance = float(np.sum(np.abs(x_next - y_next)))
            if distance > best:
                x, y, best = x_next, y_next, distance
            else:
                step /= 2.0
        return best

    def factor_table(
        self,
        C: float,
        epsilon: float,
        dims: Optional[Iterable[int]] = None
    ) -> pd.DataFrame:
        """
        Claimed vs true sensitivity over encoder sizes, with the effective
        epsilon a 2C-calibrated mechanism actually delivers.
        """
        dims = list(dims) if dims is not None else list(self.factor_dims)
        claimed = claimed_sensitivity(C).value
        rows = []
        for n in dims:
            true = true_sensitivity_l2clip(C, n)
            rows.append({
                'dim': n,
                'claimed': claimed,
                'true': true,
                'factor': true / claimed,
                'epsilon': epsilon,
                'effective_epsilon': effective_epsilon(epsilon, claimed, true),
            })
        return pd.DataFrame(rows, columns=[
            'dim', 'claimed', 'true', 'factor', 'epsilon', 'effective_epsilon'])
