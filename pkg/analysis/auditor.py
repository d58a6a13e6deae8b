from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd

from core.vectors import (
    LatentVector, clip, ensure_same_dim, l1_distance, reverse_triangle_gap
)
from mechanisms.privatizer import MechanismSpec, mechanism_log_density, privatize
from utils.rng import SeededRng


VIOLATION_SLACK = 1e-12
SLACK_ULPS_PER_COORDINATE = 4


def violation_slack(delta_f: float, dim: int) -> float:
    """
    Absolute slack for the clipped-distance > Δf test: 1e-12, widened to a
    few ulps of Δf per coordinate once those exceed it (large C or n).
    """
    return max(VIOLATION_SLACK,
               SLACK_ULPS_PER_COORDINATE * dim * float(np.spacing(delta_f)))


Pair = Tuple[LatentVector, LatentVector]


@dataclass
class AuditFinding:
    pair: Pair
    l1_distance_after_clip: float
    claimed_sensitivity: float
    ratio_exponent_factor: float  # l1 distance / claimed sensitivity
    epsilon: float
    violated: bool
    verdict_note: str
    mode: str = ''

    def __post_init__(self):
        if self.ratio_exponent_factor < 0:
            raise ValueError("Ratio exponent factor cannot be negative")
        slack = violation_slack(self.claimed_sensitivity, self.pair[0].dim)
        expected = self.l1_distance_after_clip > self.claimed_sensitivity + slack
        if self.violated != expected:
            raise ValueError(
                f"Verdict {self.violated} disagrees with distance "
                f"{self.l1_distance_after_clip} vs bound {self.claimed_sensitivity}")

    @property
    def ratio_exponent(self) -> float:
        """Realized exponent: the density ratio is bounded by exp(this)."""
        return self.ratio_exponent_factor * self.epsilon

    def to_dict(self) -> Dict:
        return {
            'mode': self.mode,
            'x': self.pair[0].tolist(),
            'y': self.pair[1].tolist(),
            'l1_distance_after_clip': self.l1_distance_after_clip,
            'claimed_sensitivity': self.claimed_sensitivity,
            'ratio_exponent_factor': self.ratio_exponent_factor,
            'ratio_exponent': self.ratio_exponent,
            'epsilon': self.epsilon,
            'violated': self.violated,
            'verdict_note': self.verdict_note,
        }


@dataclass
class RatioChain:
    """
    One evaluation of the Laplace-mechanism proof chain at a point z:

        log_ratio <= triangle_bound == l1_bound <= epsilon
    """
    log_ratio: float
    triangle_bound: float
    l1_bound: float
    epsilon: float
    min_triangle_gap: float
    first_failure: Optional[str]

    @property
    def holds(self) -> bool:
        return self.first_failure is None


def ratio_bound_exponent(fx: LatentVector, fy: LatentVector, delta_f: float,
                         epsilon: float) -> float:
    """
    ε * ||fy - fx||_1 / Δf, the tightest exponent bounding the density ratio
    """
    ensure_same_dim(fx, fy)
    if delta_f <= 0:
        raise ValueError(f"Sensitivity must be positive, not {delta_f}")
    return epsilon * l1_distance(fy, fx) / delta_f


def far_field_point(fx: LatentVector, fy: LatentVector, scale: float,
                    multiplier: float = 1e3) -> LatentVector:
    """
    z = f(x) + t * sign(f(x) - f(y)): every coordinate sits on the far side of
    f(x), where the one-dimensional log ratio saturates.
    """
    t = multiplier * max(scale, float(np.max(np.abs(fx.components))))
    return LatentVector(
        fx.components + t * np.sign(fx.components - fy.components))


class DPAuditor:
    def __init__(self, config: Dict):
        self.probe_tolerance = config.get('probe_tolerance', 1e-6)
        self.far_field_multiplier = config.get('far_field_multiplier', 1e3)
        self.workers = config.get('workers', 1)
        self.logger = logging.getLogger(__name__)

    def check_dp_bound(self, x: LatentVector, y: LatentVector,
                       spec: MechanismSpec) -> AuditFinding:
        """
        Clip both inputs and compare their L1 distance with the mechanism's
        claimed sensitivity
        """
        ensure_same_dim(x, y)
        spec.check_dim(x.dim)
        fx = clip(x, spec.clip)
        fy = clip(y, spec.clip)
        distance = l1_distance(fx, fy)
        delta_f = spec.claimed_sensitivity
        violated = distance > delta_f + violation_slack(delta_f, x.dim)

        if violated:
            verdict = (f"VIOLATED: clipped L1 distance {distance!r} exceeds "
                       f"Δf = {delta_f!r}; {spec.note}")
        else:
            verdict = (f"within bound: clipped L1 distance {distance!r} <= "
                       f"Δf = {delta_f!r}; {spec.note}")

        return AuditFinding(
            pair=(x, y),
            l1_distance_after_clip=distance,
            claimed_sensitivity=delta_f,
            ratio_exponent_factor=distance / delta_f,
            epsilon=spec.epsilon,
            violated=violated,
            verdict_note=verdict,
            mode=spec.scale_mode.value
        )

    def numeric_ratio_probe(
        self,
        x: LatentVector,
        y: LatentVector,
        spec: MechanismSpec,
        probe_points: int,
        seed: int,
        far_field: bool = True
    ) -> float:
        """
        Largest observed log p(M(x) = z) - log p(M(y) = z) over probe points.

        Probes are mechanism outputs for x and for y (alternating, one RNG
        stream per probe) plus, when far_field is set, the point where the
        supremum is attained.
        """
        if probe_points < 1:
            raise ValueError(f"Need at least one probe point, got {probe_points}")
        ensure_same_dim(x, y)
        rng = SeededRng(seed)
        probes = [privatize(x if k % 2 == 0 else y, spec, rng.stream(k))
                  for k in range(probe_points)]
        if far_field:
            probes.append(far_field_point(
                clip(x, spec.clip), clip(y, spec.clip),
                spec.noise_scale, self.far_field_multiplier))

        best = -np.inf
        for z in probes:
            difference = (mechanism_log_density(spec, x, z) -
                          mechanism_log_density(spec, y, z))
            best = max(best, difference)
        return float(best)

    def ratio_chain(self, x: LatentVector, y: LatentVector, z: LatentVector,
                    spec: MechanismSpec) -> RatioChain:
        """
        Evaluate every inequality of the Laplace privacy proof at z
        """
        ensure_same_dim(x, z)
        fx = clip(x, spec.clip).components
        fy = clip(y, spec.clip).components
        weight = spec.epsilon / spec.claimed_sensitivity

        # Realized log density ratio at z
        log_ratio = (mechanism_log_density(spec, x, z) -
                     mechanism_log_density(spec, y, z))

        # Per-coordinate triangle gaps and the bounds they give
        gaps = [reverse_triangle_gap(a, b, c)
                for a, b, c in zip(z.components, fy, fx)]
        triangle_bound = weight * float(np.sum(np.abs(fy - fx)))
        l1_bound = ratio_bound_exponent(
            LatentVector(fx), LatentVector(fy),
            spec.claimed_sensitivity, spec.epsilon)

        # First inequality of the chain that fails, if any
        failure = None
        if min(gaps) < -self.probe_tolerance:
            failure = 'triangle inequality'
        elif log_ratio > triangle_bound + self.probe_tolerance:
            failure = 'density ratio'
        elif float(np.sum(np.abs(fy - fx))) > (
                spec.claimed_sensitivity +
                violation_slack(spec.claimed_sensitivity, x.dim)):
            failure = 'sensitivity'

        return RatioChain(
            log_ratio=log_ratio,
            triangle_bound=triangle_bound,
            l1_bound=l1_bound,
            epsilon=spec.epsilon,
            min_triangle_gap=float(min(gaps)),
            first_failure=failure
        )

    def max_divergence(self, x: LatentVector, y: LatentVector,
                       spec: MechanismSpec) -> float:
        """
        sup_z of the log density ratio, taken in both directions
        """
        fx = clip(x, spec.clip)
        fy = clip(y, spec.clip)
        divergences = []
        for a, b, fa, fb in ((x, y, fx, fy), (y, x, fy, fx)):
            z = far_field_point(fa, fb, spec.noise_scale,
                                self.far_field_multiplier)
            divergences.append(mechanism_log_density(spec, a, z) -
                               mechanism_log_density(spec, b, z))
        return float(max(divergences))

    def audit_pairs(
        self,
        pairs: Sequence[Pair],
        mode: str,
        clip_constant: float,
        epsilon: float
    ) -> List[AuditFinding]:
        """
        Audit many pairs; mechanisms are calibrated per pair dimension.
        """
        specs: Dict[int, MechanismSpec] = {}

        def audit(indexed: Tuple[int, Pair]) -> AuditFinding:
            index, (x, y) = indexed
            try:
                ensure_same_dim(x, y)
                return self.check_dp_bound(x, y, specs[x.dim])
            except Exception as e:
                self.logger.error(f"Error auditing pair {index}: {e}")
                raise

        # Calibrate one mechanism per dimension
        for x, _ in pairs:
            if x.dim not in specs:
                specs[x.dim] = MechanismSpec.build(
                    mode, clip_constant, epsilon, dim=x.dim)

        # Audit in input order
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                findings = list(pool.map(audit, enumerate(pairs)))
        else:
            findings = [audit(item) for item in enumerate(pairs)]

        violations = sum(f.violated for f in findings)
        self.logger.info(
            f"Audited {len(findings)} pairs under {mode}: {violations} violations")
        return findings

    def get_audit_metrics(self, findings: Sequence[AuditFinding]) -> Dict:
        """
        Summary metrics over a batch of findings
        """
        if not findings:
            return {'total_pairs': 0, 'violations': 0, 'violation_fraction': 0.0,
                    'max_factor': 0.0, 'worst_pair_index': None}
        frame = pd.DataFrame({
            'factor': [f.ratio_exponent_factor for f in findings],
            'violated': [f.violated for f in findings],
        })
        return {
            'total_pairs': len(frame),
            'violations': int(frame['violated'].sum()),
            'violation_fraction': float(frame['violated'].mean()),
            'max_factor': float(frame['factor'].max()),
            'worst_pair_index': int(frame['factor'].idxmax()),
        }
