"""Command-line surface: one subcommand per auditing task.

Exit codes: 0 success, 1 invalid input or usage, 2 the audit found at least
one pair violating the mechanism's claimed sensitivity.
"""

import argparse
import copy
import json
import sys
from contextlib import redirect_stdout
from pathlib import Path
from typing import Callable, Dict, List, Optional, TextIO, Tuple
import logging

from analysis.auditor import DPAuditor
from analysis.sensitivity import (
    SensitivityAnalyzer, counterexample_pair, effective_epsilon
)
from cli.render import FORMATS, Payload, render
from config.config import (
    AUDIT_CONFIG, LOGGING_CONFIG, MECHANISM_CONFIG, SENSITIVITY_CONFIG,
    SIMULATION_CONFIG
)
from core.vectors import ClipSpec, LatentVector, NormKind, clip
from mechanisms.privatizer import MechanismSpec, ScaleMode, privatize
from simulation.samplers import SamplerKind, SigmaConvention
from simulation.violations import (
    PairMode, SimulationConfig, SimulationResult, ViolationSimulator
)
from utils.helpers import parse_float_list, parse_int_list
from utils.log_setup import setup_logging
from utils.rng import SeededRng


EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATIONS = 2

MODES = [mode.value for mode in ScaleMode]

logger = logging.getLogger(__name__)

# handler result: payload, default output format, exit code
Outcome = Tuple[Payload, str, int]


class CliUsageError(Exception):
    pass


class AuditArgumentParser(argparse.ArgumentParser):
    """Usage errors raise instead of exiting with argparse's status 2."""

    def error(self, message: str):
        raise CliUsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not value > 0 or value == float('inf'):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def seed_value(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def float_list(text: str) -> List[float]:
    try:
        return parse_float_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def dim_list(text: str) -> List[int]:
    try:
        dims = parse_int_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dimensions must be >= 1, got {text}")
    return dims


def pair_mode(text: str) -> PairMode:
    try:
        return PairMode.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _with_workers(config: Dict, threads: Optional[int]) -> Dict:
    settings = copy.deepcopy(config)
    if threads:
        settings['workers'] = threads
    return settings


# --- handlers -------------------------------------------------------------

def cmd_clip(args: argparse.Namespace) -> Outcome:
    clipped = clip(LatentVector(args.vector), ClipSpec(args.norm, args.clip))
    return clipped.tolist(), 'json', EXIT_OK


def cmd_noise(args: argparse.Namespace) -> Outcome:
    r = LatentVector(args.vector)
    spec = MechanismSpec.build(args.mode, args.clip, args.epsilon, dim=r.dim)
    if not spec.is_private:
        logger.warning(f"Mode {spec.scale_mode.value}: {spec.note}")
    noisy = privatize(r, spec, SeededRng(args.seed).stream(0))
    return noisy.tolist(), 'json', EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> Outcome:
    analyzer = SensitivityAnalyzer(_with_workers(SENSITIVITY_CONFIG, args.threads))
    spec = ClipSpec(args.norm, args.clip)
    if args.empirical:
        if args.seed is None or args.vectors is None:
            raise ValueError("--empirical requires --vectors and --seed")
        report = analyzer.empirical_sensitivity(
            spec, args.dim, SamplerKind(args.sampler), args.vectors, args.seed,
            convention=SigmaConvention(args.sigma_convention))
    else:
        report = analyzer.analytic_report(spec, args.dim)

    payload = report.to_dict()
    if args.epsilon is not None:
        payload['epsilon'] = args.epsilon
        payload['effective_epsilon'] = effective_epsilon(
            args.epsilon, report.claimed, report.true_analytic)
    return payload, 'json', EXIT_OK


def cmd_counterexample(args: argparse.Namespace) -> Outcome:
    x, y = counterexample_pair(args.clip)
    spec = MechanismSpec.build(args.mode, args.clip, args.epsilon, dim=x.dim)
    finding = DPAuditor(AUDIT_CONFIG).check_dp_bound(x, y, spec)
    code = EXIT_VIOLATIONS if finding.violated else EXIT_OK
    return finding.to_dict(), 'json', code


def _read_pairs(path: str) -> List[Tuple[LatentVector, LatentVector]]:
    pairs = []
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if isinstance(record, dict):
                    x, y = record['x'], record['y']
                else:
                    x, y = record
                pairs.append((LatentVector(x), LatentVector(y)))
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{number}: not a vector pair ({e})")
    return pairs


def cmd_audit(args: argparse.Namespace) -> Outcome:
    auditor = DPAuditor(_with_workers(AUDIT_CONFIG, args.threads))
    findings = auditor.audit_pairs(
        _read_pairs(args.pairs_file), args.mode, args.clip, args.epsilon)
    metrics = auditor.get_audit_metrics(findings)
    logger.info(f"Audit summary: {metrics}")
    code = EXIT_VIOLATIONS if metrics['violations'] else EXIT_OK
    return [f.to_dict() for f in findings], 'json', code


def cmd_simulate(args: argparse.Namespace) -> Outcome:
    simulator = ViolationSimulator(_with_workers(SIMULATION_CONFIG, args.threads))
    samplers = (list(SamplerKind) if args.sampler == 'both'
                else [SamplerKind(args.sampler)])
    result = SimulationResult()
    for sampler in samplers:
        config = SimulationConfig(
            dims=args.dims,
            num_vectors=args.vectors,
            clip_constant=args.clip,
            sampler=sampler,
            seed=args.seed,
            pair_mode=args.pair_mode,
            sigma_convention=SigmaConvention(args.sigma_convention)
        )
        result.records.extend(simulator.run(config).records)
    return result.to_frame(), 'csv', EXIT_OK


def cmd_factors(args: argparse.Namespace) -> Outcome:
    analyzer = SensitivityAnalyzer(SENSITIVITY_CONFIG)
    return analyzer.factor_table(args.clip, args.epsilon, args.dims), 'csv', EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> AuditArgumentParser:
    common = AuditArgumentParser(add_help=False)
    common.add_argument('--format', choices=FORMATS, default=None,
                        help='output format (default depends on the subcommand)')
    common.add_argument('--out', default=None,
                        help='write the report to PATH instead of standard output')
    common.add_argument('--log-level', default=LOGGING_CONFIG['level'],
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    parser = AuditArgumentParser(
        prog='dp-audit',
        description='Audit the Laplace mechanism applied to clipped latent '
                    'vectors: the ADePT privatization (refuted claim) and its '
                    'corrected variants.')
    sub = parser.add_subparsers(dest='command', metavar='<command>')
    sub.required = True

    def add(name: str, handler: Callable, help_text: str) -> AuditArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text,
                           description=help_text)
        p.set_defaults(handler=handler)
        return p

    def mechanism_flags(p: AuditArgumentParser, default_mode: str) -> None:
        p.add_argument('--mode', choices=MODES, default=default_mode,
                       help='claimed-adept: noise scale 2C/ε from the refuted 2C '
                            'sensitivity (NOT ε-DP); corrected-rescaled: scale '
                            '2C√n/ε; corrected-l1clip: L1 clip with scale 2C/ε')
        p.add_argument('--clip', type=positive_float, required=True,
                       help='clipping constant C')
        p.add_argument('--epsilon', type=positive_float, required=True,
                       help='privacy budget ε')

    p = add('clip', cmd_clip,
            'Clip a latent vector: r * min(1, C / ||r||_p). L2 is the ADePT '
            'clipping function, whose 2C sensitivity claim is refuted; L1 is '
            'the corrected L1-clip remedy.')
    p.add_argument('--norm', choices=[k.value for k in NormKind], default='l2')
    p.add_argument('--clip', type=positive_float, required=True,
                   help='clipping constant C')
    p.add_argument('--vector', type=float_list, required=True,
                   help='comma-separated coordinates (use --vector=-1,2 for a '
                        'leading minus sign)')

    p = add('noise', cmd_noise,
            'Privatize a latent vector with the Laplace mechanism: clip, then '
            'add i.i.d. Laplace noise per coordinate. claimed-adept is the '
            'refuted calibration; the corrected modes are ε-DP.')
    mechanism_flags(p, MECHANISM_CONFIG['default_mode'])
    p.add_argument('--seed', type=seed_value, required=True)
    p.add_argument('--vector', type=float_list, required=True,
                   help='comma-separated coordinates')

    p = add('sensitivity', cmd_sensitivity,
            'L1 sensitivity of the clipping function: the refuted claim 2C '
            'against the true 2C√n (L2 clip) or 2C (L1 clip), with the '
            'extremal hypercube-corner witness pair or a Monte Carlo estimate.')
    p.add_argument('--dim', type=positive_int, required=True, help='latent dimension n')
    p.add_argument('--clip', type=positive_float, required=True,
                   help='clipping constant C')
    p.add_argument('--norm', choices=[k.value for k in NormKind], default='l2')
    p.add_argument('--epsilon', type=positive_float, default=None,
                   help='also report the effective ε of a 2C-calibrated mechanism')
    p.add_argument('--empirical', action='store_true',
                   help='estimate the maximum over sampled latent vectors')
    p.add_argument('--vectors', type=positive_int, default=None)
    p.add_argument('--sampler', choices=[k.value for k in SamplerKind],
                   default='uniform')
    p.add_argument('--sigma-convention', choices=[c.value for c in SigmaConvention],
                   default=SIMULATION_CONFIG['sigma_convention'])
    p.add_argument('--seed', type=seed_value, default=None)
    p.add_argument('--threads', type=positive_int, default=None)

    p = add('counterexample', cmd_counterexample,
            'The two-dimensional counterexample (±2C/3, ±2C/3) to the refuted '
            'ADePT privacy claim: clipped L1 distance 8C/3 against the claimed 2C, '
            'realizing exponent (4/3)ε. Exits 2 when the bound is violated.')
    mechanism_flags(p, ScaleMode.CLAIMED_ADEPT.value)

    p = add('audit', cmd_audit,
            'Check the Laplace-mechanism bound ε·||f(x) - f(y)||_1 / Δf <= ε for '
            'every pair in a newline-delimited JSON file ({"x": [...], "y": '
            '[...]} per line). claimed-adept is the refuted calibration; the '
            'corrected modes must never violate. Exits 2 iff any pair violates.')
    mechanism_flags(p, MECHANISM_CONFIG['default_mode'])
    p.add_argument('--pairs-file', required=True)
    p.add_argument('--threads', type=positive_int, default=None)

    p = add('simulate', cmd_simulate,
            'Violation sweep: the fraction of clipped latent pairs whose L1 '
            'distance exceeds the refuted 2C bound, per dimension and sampler '
            '(plot-ready CSV).')
    p.add_argument('--dims', type=dim_list,
                   default=list(SIMULATION_CONFIG['dims']))
    p.add_argument('--vectors', type=positive_int,
                   default=SIMULATION_CONFIG['num_vectors'])
    p.add_argument('--sampler', choices=['uniform', 'gaussian', 'both'],
                   default='both')
    p.add_argument('--clip', type=positive_float,
                   default=SIMULATION_CONFIG['clip_constant'])
    p.add_argument('--seed', type=seed_value, required=True)
    p.add_argument('--pair-mode', type=pair_mode, default=PairMode(),
                   help="'all' or 'sampled:K'")
    p.add_argument('--sigma-convention', choices=[c.value for c in SigmaConvention],
                   default=SIMULATION_CONFIG['sigma_convention'],
                   help='variance: σ² = 0.1·C (default); stddev: σ = 0.1·C')
    p.add_argument('--threads', type=positive_int, default=None)

    p = add('factors', cmd_factors,
            'How much the true sensitivity 2C√n exceeds the refuted 2C claim '
            'over encoder sizes, with the effective ε actually delivered; '
            'noise rescaled by √n is the corrected calibration.')
    p.add_argument('--clip', type=positive_float,
                   default=MECHANISM_CONFIG['clip_constant'])
    p.add_argument('--epsilon', type=positive_float,
                   default=MECHANISM_CONFIG['epsilon'])
    p.add_argument('--dims', type=dim_list,
                   default=list(SENSITIVITY_CONFIG['factor_dims']))

    return parser


def _emit(text: str, out: Optional[str], stdout: TextIO) -> None:
    if out and out != '-':
        Path(out).write_text(text, encoding='utf-8', newline='\n')
    else:
        stdout.write(text)


def dispatch(argv: List[str], stdout: Optional[TextIO] = None,
             stderr: Optional[TextIO] = None) -> int:
    """
    Parse argv, run the subcommand and emit its report; returns the exit code
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with redirect_stdout(stdout):
            args = parser.parse_args(argv)
    except CliUsageError as e:
        stderr.write(f"{e}\n")
        return EXIT_INVALID
    except SystemExit as e:  # --help
        return int(e.code or 0)

    setup_logging(args.log_level, stderr)
    try:
        payload, default_format, code = args.handler(args)
        _emit(render(payload, args.format or default_format), args.out, stdout)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    return code
