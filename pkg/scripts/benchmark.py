#!/usr/bin/env python3
"""
Multi-seed benchmark for the problems with a known optimum.

Runs every (problem, seed) pair concurrently and prints the gap between the final
objective value and the independent eigen/SVD oracle.
"""
import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List

from tabulate import tabulate

from client.cli import MODES
from common.constants import DEFAULT_SEED
from common.utils import setup_logger
from optimizer.solver import SolverConfig, audit_history, run
from problems.generators import make_problem


logger = setup_logger('Benchmark')

ORACLE_PROBLEMS = {
    'top-eig': {'n': 20},
    'dominant-subspace': {'r': 12, 't': 4},
    'truncated-svd': {'r': 8, 's': 6, 't': 3},
}


def benchmark_problem(name: str, sizes: Dict, seed: int, mode: str) -> Dict:
    """Run one seed of one problem and compare with its oracle."""
    gradient_variant, hessian_variant = MODES[mode]
    config = SolverConfig(seed=seed, gradient_variant=gradient_variant, hessian_variant=hessian_variant)
    problem = make_problem(name, seed, **sizes)

    start_time = time.time()
    result = run(problem.objective, problem.manifold, config)
    elapsed_time = time.time() - start_time

    optimum = problem.optimum_oracle()
    violations = audit_history(result, config.sigma1)
    return {
        'problem': name,
        'manifold': problem.label,
        'seed': seed,
        'OFV': result.final_f,
        'oracle': optimum,
        'gap': result.final_f - optimum,
        'iters': result.iterations,
        'f_evals': result.f_evals,
        'time': f"{elapsed_time:.2f}s",
        'status': result.status.value,
        'audit': 'ok' if not violations else f"{len(violations)} violation(s)",
    }


def run_benchmarks(problems: List[str], seeds: List[int], mode: str, jobs: int) -> List[Dict]:
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(benchmark_problem, name, ORACLE_PROBLEMS[name], seed, mode)
                   for name in problems for seed in seeds]
        return [future.result() for future in futures]


def main():
    """Main benchmark function."""
    parser = argparse.ArgumentParser(description='Multi-seed oracle benchmark')
    parser.add_argument('--problems', nargs='+', choices=list(ORACLE_PROBLEMS),
                        default=list(ORACLE_PROBLEMS), help='Problems to run')
    parser.add_argument('--seeds', type=int, default=5, help='Number of seeds per problem')
    parser.add_argument('--first-seed', type=int, default=DEFAULT_SEED, help='First seed')
    parser.add_argument('--mode', choices=list(MODES), default='exact', help='Derivative mode')
    parser.add_argument('--jobs', type=int, default=4, help='Concurrent runs')
    parser.add_argument('--tolerance', type=float, default=1e-6, help='Allowed oracle gap')

    args = parser.parse_args()
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    logger.info(f"Benchmarking {', '.join(args.problems)} over {len(seeds)} seeds in {args.mode} mode")

    results = run_benchmarks(args.problems, seeds, args.mode, args.jobs)
    print(tabulate(results, headers='keys', floatfmt='.3e'))

    failures = [r for r in results if abs(r['gap']) > args.tolerance or r['audit'] != 'ok']
    if failures:
        print(f"\n{len(failures)} run(s) outside tolerance {args.tolerance:g}")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
