#!/usr/bin/env python3
"""
Command-line interface for the cubic regularization benchmark.
"""
import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from common import metrics
from common.constants import (
    DEFAULT_EPS_G, DEFAULT_EPS_H, DEFAULT_MAX_ALPHA, DEFAULT_MAX_OUTER_ITERS, DEFAULT_OUT_DIR,
    DEFAULT_SEED, DEFAULT_SIGMA1, DEFAULT_THETA, DEFAULT_V0_NORM, EXIT_IO, EXIT_NONCONVERGENCE,
    EXIT_OK, EXIT_USAGE, SEED_ENV_VAR,
)
from common.errors import ConfigError, RarcError
from common.records import GradientVariant, HessianVariant, RunReport, RunStatus
from common.utils import set_log_level, setup_logger
from optimizer.solver import SolverConfig, audit_history, run
from problems.generators import PROBLEM_NAMES, SUITE, make_problem
from .reporting import build_report, format_table, history_path, write_history_csv, write_summary_json


logger = setup_logger('CLI')

MODES = {
    'fd-pullback': (GradientVariant.FD, HessianVariant.PULLBACK),
    'fd-transport': (GradientVariant.FD, HessianVariant.TRANSPORT),
    'fd-gradcalls': (GradientVariant.FD, HessianVariant.GRAD_CALLS),
    'exact': (GradientVariant.EXACT, HessianVariant.EXACT),
}

DEFAULTS = {
    'problem': 'suite',
    'n': None,
    'r': None,
    's': None,
    't': None,
    'dims': None,
    'seed': None,
    'sigma1': DEFAULT_SIGMA1,
    'theta': DEFAULT_THETA,
    'eps_g': DEFAULT_EPS_G,
    'eps_h': None,
    'mode': 'fd-pullback',
    'second_order': False,
    'max_iters': DEFAULT_MAX_OUTER_ITERS,
    'max_alpha': DEFAULT_MAX_ALPHA,
    'v0_norm': DEFAULT_V0_NORM,
    'out': DEFAULT_OUT_DIR,
    'jobs': 1,
    'metrics_file': None,
    'record_timings': False,
}


@dataclass
class Selection:
    """What to run and where the artifacts go."""
    problems: List[Tuple[str, Dict]]
    out_dir: str
    dry_run: bool = False
    jobs: int = 1
    metrics_file: Optional[str] = None
    record_timings: bool = False


def create_parser():
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        description='Derivative-free adaptive cubic regularization on manifolds',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument('--problem', choices=PROBLEM_NAMES + ['suite'],
                        help='Problem to run (default: suite)')
    parser.add_argument('--n', type=int, help='Sphere dimension for top-eig (--r is accepted too)')
    parser.add_argument('--r', type=int, help='Row dimension')
    parser.add_argument('--s', type=int, help='Second row dimension (truncated-svd)')
    parser.add_argument('--t', type=int, help='Column dimension / rank')
    parser.add_argument('--dims', type=int, nargs=4, metavar='D', help='Layer sizes r1 r2 r3 r4 for swish')
    parser.add_argument('--seed', type=int, help=f'Random seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})')
    parser.add_argument('--sigma1', type=float, help=f'Initial regularization (default: {DEFAULT_SIGMA1})')
    parser.add_argument('--theta', type=float, help=f'Subproblem stationarity factor (default: {DEFAULT_THETA})')
    parser.add_argument('--eps-g', dest='eps_g', type=float, help=f'Gradient tolerance (default: {DEFAULT_EPS_G})')
    parser.add_argument('--eps-h', dest='eps_h', type=float,
                        help=f'Curvature tolerance in second-order mode (default: {DEFAULT_EPS_H})')
    parser.add_argument('--mode', choices=list(MODES), help='Derivative mode (default: fd-pullback)')
    parser.add_argument('--second-order', dest='second_order', action='store_true',
                        help='Target second-order stationary points')
    parser.add_argument('--max-iters', dest='max_iters', type=int, help='Outer iteration limit')
    parser.add_argument('--max-alpha', dest='max_alpha', type=int, help='Inner trial limit per iteration')
    parser.add_argument('--v0-norm', dest='v0_norm', type=float, help='Norm of the initial step v_0')
    parser.add_argument('--out', help=f'Output directory (default: {DEFAULT_OUT_DIR})')
    parser.add_argument('--config', help='JSON file with default values for these flags')
    parser.add_argument('--dry-run', dest='dry_run', action='store_true',
                        help='Print the resolved configuration and exit')
    parser.add_argument('--jobs', type=int, help='Problems to run concurrently in suite mode')
    parser.add_argument('--metrics-file', dest='metrics_file', help='Write Prometheus metrics to this file')
    parser.add_argument('--record-timings', dest='record_timings', action='store_true',
                        help='Include wall_ms in summary.json')
    parser.add_argument('--log-level', dest='log_level', help='Logging level (default: $RARC_LOG_LEVEL or INFO)')
    return parser


def load_config_file(path: str) -> Dict:
    with open(path, encoding='utf-8') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError(['config'], f"Config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown, f"Unknown config field(s): {', '.join(unknown)}")
    return data


def parse_config(argv: Optional[Sequence[str]] = None) -> Tuple[SolverConfig, Selection]:
    """Resolve flags over config file over environment seed over defaults."""
    args = vars(create_parser().parse_args(argv))
    values = dict(DEFAULTS)
    if 'config' in args:
        values.update(load_config_file(args.pop('config')))
    if values['seed'] is None and 'seed' not in args:
        env_seed = os.environ.get(SEED_ENV_VAR)
        try:
            values['seed'] = int(env_seed) if env_seed is not None else DEFAULT_SEED
        except ValueError:
            raise ConfigError(['seed'], f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")
    log_level = args.pop('log_level', None)
    dry_run = args.pop('dry_run', False)
    values.update(args)
    if log_level:
        set_log_level(log_level.upper())

    if values['problem'] not in PROBLEM_NAMES + ['suite']:
        raise ConfigError(['problem'], f"Unknown problem: {values['problem']}")
    if values['mode'] not in MODES:
        raise ConfigError(['mode'], f"Unknown mode: {values['mode']}")
    gradient_variant, hessian_variant = MODES[values['mode']]
    eps_h = values['eps_h']
    if eps_h is None and values['second_order']:
        eps_h = DEFAULT_EPS_H
    if values['jobs'] < 1:
        raise ConfigError(['jobs'])

    config = SolverConfig(
        sigma1=values['sigma1'],
        theta=values['theta'],
        eps_g=values['eps_g'],
        eps_H=eps_h,
        max_outer_iters=values['max_iters'],
        max_alpha=values['max_alpha'],
        second_order_mode=values['second_order'],
        hessian_variant=hessian_variant,
        gradient_variant=gradient_variant,
        v0_norm=values['v0_norm'],
        seed=values['seed'],
    )

    sizes = {key: values[key] for key in ('n', 'r', 's', 't', 'dims') if values[key] is not None}
    if values['problem'] == 'suite':
        if sizes:
            raise ConfigError(sorted(sizes), f"Size flags need --problem: {', '.join(sorted(sizes))}")
        problems = [(name, dict(params)) for name, params in SUITE]
    else:
        problems = [(values['problem'], sizes)]
    selection = Selection(
        problems=problems,
        out_dir=values['out'],
        dry_run=dry_run,
        jobs=values['jobs'],
        metrics_file=values['metrics_file'],
        record_timings=values['record_timings'],
    )
    return config, selection


def _run_one(name: str, sizes: Dict, config: SolverConfig, out_dir: str) -> RunReport:
    problem = make_problem(name, config.seed, **sizes)
    try:
        result = run(problem.objective, problem.manifold, config)
    except RarcError as e:
        logger.error(f"{name} failed: {e}")
        return RunReport(name, problem.label, None, None, 0,
                         problem.objective.eval_counter, 0.0, RunStatus.ERROR.value)

    for violation in audit_history(result, config.sigma1):
        logger.warning(f"{name}: {violation}")
    write_history_csv(history_path(out_dir, name), result.history)
    return build_report(problem, result)


def run_benchmark(selection: Selection, config: SolverConfig) -> List[RunReport]:
    """Run the selected problems and write the CSV and JSON artifacts.

    Reports are returned in selection order regardless of completion order.
    """
    with ThreadPoolExecutor(max_workers=selection.jobs) as executor:
        futures = [executor.submit(_run_one, name, sizes, config, selection.out_dir)
                   for name, sizes in selection.problems]
        reports = [future.result() for future in futures]

    write_summary_json(os.path.join(selection.out_dir, 'summary.json'), reports,
                       config.to_dict(), include_timing=selection.record_timings)
    if selection.metrics_file:
        metrics.write_metrics(selection.metrics_file)
    return reports


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    try:
        config, selection = parse_config(argv)
    except (ConfigError, OSError, json.JSONDecodeError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if selection.dry_run:
        resolved = {
            'config': config.to_dict(),
            'problems': [{'name': name, 'sizes': sizes} for name, sizes in selection.problems],
            'out': selection.out_dir,
        }
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return EXIT_OK

    try:
        reports = run_benchmark(selection, config)
    except OSError as e:
        logger.error(f"Could not write results: {e}")
        return EXIT_IO
    except RarcError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    print(format_table(reports))
    converged = {RunStatus.FIRST_ORDER_CONVERGED.value, RunStatus.SECOND_ORDER_CONVERGED.value}
    if all(report.status in converged for report in reports):
        return EXIT_OK
    return EXIT_NONCONVERGENCE


if __name__ == '__main__':
    sys.exit(main())
