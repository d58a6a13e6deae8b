from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union
import logging

import numpy as np
import pandas as pd

from analysis.auditor import violation_slack
from config.config import CSV_HEADER, SIMULATION_CONFIG
from core.pairwise import (
    PairCount, count_listed_pairs_above, count_pairs_above, pair_from_index,
    total_pairs
)
from core.vectors import ClipSpec, NormKind, clip_rows
from simulation.samplers import SamplerKind, SigmaConvention, sample_matrix
from utils.rng import SeededRng


SAMPLER_STREAMS = {SamplerKind.UNIFORM: 0, SamplerKind.GAUSSIAN: 1}


@dataclass(frozen=True)
class PairMode:
    kind: str = 'all'  # 'all' or 'sampled'
    count: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ('all', 'sampled'):
            raise ValueError(f"Pair mode must be 'all' or 'sampled', not {self.kind}")
        if self.kind == 'sampled' and (self.count is None or self.count < 1):
            raise ValueError("Sampled pair mode needs a positive pair count")

    @classmethod
    def parse(cls, text: str) -> 'PairMode':
        """'all' or 'sampled:K'"""
        if text == 'all':
            return cls('all')
        kind, _, count = text.partition(':')
        if kind != 'sampled' or not count.isdigit():
            raise ValueError(f"Pair mode must be 'all' or 'sampled:K', not {text!r}")
        return cls('sampled', int(count))


@dataclass
class SimulationConfig:
    dims: Sequence[int]
    num_vectors: int
    clip_constant: float
    sampler: SamplerKind
    seed: int
    pair_mode: PairMode = field(default_factory=PairMode)
    sigma_convention: SigmaConvention = SigmaConvention.VARIANCE

    def __post_init__(self):
        self.sampler = SamplerKind(self.sampler)
        self.sigma_convention = SigmaConvention(self.sigma_convention)
        if self.num_vectors < 2:
            raise ValueError(f"Need at least two vectors, got {self.num_vectors}")
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"Dims must be a non-empty list of n >= 1, got {self.dims}")
        if self.clip_constant <= 0:
            raise ValueError(f"Clip constant must be positive, not {self.clip_constant}")
        if self.seed < 0:
            raise ValueError(f"Seed must be non-negative, not {self.seed}")


@dataclass
class DimensionRecord:
    dim: int
    sampler: SamplerKind
    num_vectors: int
    pairs_checked: int
    violations: int
    violation_fraction: float
    clip_constant: float
    seed: int
    claimed_bound: float
    pairs_clamped: bool = False
    first_witness: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not 0 <= self.violations <= self.pairs_checked:
            raise ValueError("Violations must lie between 0 and pairs checked")
        if self.violation_fraction != self.violations / self.pairs_checked:
            raise ValueError("Violation fraction must equal violations / pairs")


@dataclass
class SimulationResult:
    records: List[DimensionRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        rows = [{
            'dim': r.dim,
            'sampler': SamplerKind(r.sampler).value,
            'num_vectors': r.num_vectors,
            'pairs_checked': r.pairs_checked,
            'violations': r.violations,
            'violation_fraction': r.violation_fraction,
            'clip_constant': r.clip_constant,
            'seed': r.seed,
        } for r in self.records]
        return pd.DataFrame(rows, columns=CSV_HEADER)

    def to_csv(self, target: Union[str, TextIO, None] = None) -> Optional[str]:
        """Figure-ready CSV: exact header, LF endings, round-trip floats."""
        return self.to_frame().to_csv(target, index=False, lineterminator='\n')

    def fractions(self, sampler: SamplerKind) -> Dict[int, float]:
        return {r.dim: r.violation_fraction for r in self.records
                if r.sampler == SamplerKind(sampler)}


class ViolationSimulator:
    def __init__(self, config: Dict):
        self.block_rows = config.get('block_rows', 256)
        self.clip_chunk = config.get('clip_chunk', 1024)
        self.workers = config.get('workers', 1)
        self.logger = logging.getLogger(__name__)

    def sample_vectors(self, config: SimulationConfig, dim: int) -> np.ndarray:
        """
        Unclipped latent vectors for one dim; the same seed always yields the
        same matrix, whatever else the sweep contains.
        """
        rng = SeededRng(config.seed).stream(
            SAMPLER_STREAMS[config.sampler]).stream(dim)
        return sample_matrix(config.sampler, dim, config.num_vectors,
                             config.clip_constant, rng, config.sigma_convention)

    def run(self, config: SimulationConfig) -> SimulationResult:
        """
        Count clipped pairs whose L1 distance exceeds the claimed bound 2C
        for every dim of the sweep
        """
        result = SimulationResult()
        spec = ClipSpec(NormKind.L2, config.clip_constant)
        bound = 2.0 * config.clip_constant
        try:
            for dim in config.dims:
                # Sample, then clip in row chunks
                clipped = self.sample_vectors(config, dim)
                for start in range(0, clipped.shape[0], self.clip_chunk):
                    stop = start + self.clip_chunk
                    clipped[start:stop] = clip_rows(clipped[start:stop], spec)

                # Count pairs above the claimed bound
                count, clamped = self._count(clipped, bound, config, dim)
                record = DimensionRecord(
                    dim=dim,
                    sampler=config.sampler,
                    num_vectors=config.num_vectors,
                    pairs_checked=count.pairs_checked,
                    violations=count.violations,
                    violation_fraction=count.violations / count.pairs_checked,
                    clip_constant=config.clip_constant,
                    seed=config.seed,
                    claimed_bound=bound,
                    pairs_clamped=clamped,
                    first_witness=count.first_witness
                )
                result.records.append(record)
                self.logger.info(
                    f"n={dim} sampler={config.sampler.value}: "
                    f"{record.violations}/{record.pairs_checked} pairs violate "
                    f"({record.violation_fraction:.4%})")

            return result

        except Exception as e:
            self.logger.error(f"Error in violation simulation: {e}")
            raise

    def _count(self, clipped: np.ndarray, bound: float,
               config: SimulationConfig, dim: int) -> Tuple[PairCount, bool]:
        threshold = bound + violation_slack(bound, dim)
        available = total_pairs(clipped.shape[0])
        if config.pair_mode.kind == 'all':
            return count_pairs_above(
                clipped, threshold, self.workers, self.block_rows), False

        count = config.pair_mode.count
        clamped = count > available
        if clamped:
            self.logger.warning(
                f"Requested {count} sampled pairs but only {available} distinct "
                f"pairs exist for {clipped.shape[0]} vectors; clamping")
            count = available
        rng = SeededRng(config.seed).stream(
            SAMPLER_STREAMS[config.sampler]).stream(dim).stream(0)
        first, second = pair_from_index(rng.integers(available, count), clipped.shape[0])
        return count_listed_pairs_above(clipped, first, second, threshold), clamped


def run_violation_simulation(config: SimulationConfig,
                             settings: Optional[Dict] = None) -> SimulationResult:
    return ViolationSimulator(settings or SIMULATION_CONFIG).run(config)
