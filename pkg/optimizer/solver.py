"""
Adaptive cubic regularization outer loop.

Each outer iteration k tries alpha = alpha_0, alpha_0 + 1, ... where alpha_0 is the
smallest integer with 2^(alpha-1) sigma_k >= sigma1. A trial builds (g, B), minimizes
the cubic model with weight 2^alpha sigma_k and is accepted when

    f(R_p(v)) <= f(p) + (sigma_k / 24) |v_{k-1}|^3 - (2^alpha sigma_k / 24) |v|^3.

After acceptance sigma_{k+1} = 2^(alpha_k - 1) sigma_k.
"""
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from common import metrics
from common.constants import (
    DEFAULT_EPS_G, DEFAULT_MAX_ALPHA, DEFAULT_MAX_OUTER_ITERS, DEFAULT_SEED, DEFAULT_SIGMA1,
    DEFAULT_THETA, DEFAULT_V0_NORM, STALL_STEP_NORM, V0_SEED_WORD,
)
from common.errors import ConfigError, SubsolverError
from common.records import GradientVariant, HessianVariant, IterateRecord, RunStatus
from common.utils import setup_logger
from geometry.manifolds import Manifold, Point
from geometry.numkernel import lambda_min
from .fdapprox import build_trial, resolve_variants
from .model import CubicModel
from .objective import Objective
from .subsolver import check_second_order, solve_cubic


logger = setup_logger('Solver')


@dataclass
class SolverConfig:
    sigma1: float = DEFAULT_SIGMA1
    theta: float = DEFAULT_THETA
    eps_g: float = DEFAULT_EPS_G
    eps_H: Optional[float] = None
    max_outer_iters: int = DEFAULT_MAX_OUTER_ITERS
    max_alpha: int = DEFAULT_MAX_ALPHA
    second_order_mode: bool = False
    hessian_variant: HessianVariant = HessianVariant.PULLBACK
    gradient_variant: GradientVariant = GradientVariant.FD
    v0_norm: float = DEFAULT_V0_NORM
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        invalid = []
        if not self.sigma1 > 0:
            invalid.append('sigma1')
        if not self.theta >= 0:
            invalid.append('theta')
        if not self.eps_g > 0:
            invalid.append('eps_g')
        if self.eps_H is not None and not self.eps_H > 0:
            invalid.append('eps_H')
        if self.second_order_mode and self.eps_H is None:
            invalid.append('eps_H')
        if self.max_outer_iters < 1:
            invalid.append('max_outer_iters')
        if self.max_alpha < 1:
            invalid.append('max_alpha')
        if not self.v0_norm > 0:
            invalid.append('v0_norm')
        if self.seed < 0:
            invalid.append('seed')
        if invalid:
            raise ConfigError(invalid)

    def to_dict(self) -> Dict:
        return {
            'sigma1': self.sigma1,
            'theta': self.theta,
            'eps_g': self.eps_g,
            'eps_H': self.eps_H,
            'max_outer_iters': self.max_outer_iters,
            'max_alpha': self.max_alpha,
            'second_order_mode': self.second_order_mode,
            'hessian_variant': self.hessian_variant.value,
            'gradient_variant': self.gradient_variant.value,
            'v0_norm': self.v0_norm,
            'seed': self.seed,
        }


@dataclass
class SolverState:
    """Iterate p_k with |v_{k-1}|, sigma_k and f(p_k); ``status`` is set once the run ends."""
    k: int
    point: Point
    v_prev_norm: float
    sigma_k: float
    f_val: float
    status: Optional[RunStatus] = None


@dataclass
class RunResult:
    status: RunStatus
    final_point: Point
    history: List[IterateRecord] = field(default_factory=list)
    wall_time: float = 0.0
    v0_norm: float = DEFAULT_V0_NORM

    @property
    def final_f(self) -> float:
        last = self.history[-1]
        return last.f_val if last.f_next is None else last.f_next

    @property
    def final_g_norm(self) -> float:
        return self.history[-1].g_norm

    @property
    def iterations(self) -> int:
        return self.history[-1].k

    @property
    def f_evals(self) -> int:
        return self.history[-1].f_evals_cum


def initial_alpha(sigma_k: float, sigma1: float) -> int:
    """Smallest alpha >= 0 with 2^(alpha-1) sigma_k >= sigma1."""
    alpha = 0
    while math.ldexp(sigma_k, alpha - 1) < sigma1:
        alpha += 1
    return alpha


def accept_test(f_trial: float, f_k: float, sigma_k: float, alpha: int,
                v_prev_norm: float, v_norm: float) -> bool:
    threshold = f_k + sigma_k / 24.0 * v_prev_norm ** 3 - math.ldexp(sigma_k, alpha) / 24.0 * v_norm ** 3
    return f_trial <= threshold


def update_sigma(sigma_k: float, alpha_k: int) -> float:
    return math.ldexp(sigma_k, alpha_k - 1)


def outer_step(state: SolverState, obj: Objective, manifold: Manifold,
               config: SolverConfig) -> Tuple[IterateRecord, SolverState]:
    """One outer iteration: inner trials until acceptance or termination."""
    p = state.point
    basis = manifold.tangent_basis(p)
    alpha = initial_alpha(state.sigma_k, config.sigma1)
    first_alpha = alpha
    trials = 0

    def record(trial, g_norm, v_norm=0.0, lmin=None, f_next=None) -> IterateRecord:
        return IterateRecord(
            k=state.k,
            f_val=state.f_val,
            g_norm=g_norm,
            v_norm=v_norm,
            v_prev_norm=state.v_prev_norm,
            sigma_k=state.sigma_k,
            alpha_k=trial.alpha,
            h=trial.h,
            h_clamped=trial.h_was_clamped,
            f_evals_cum=obj.eval_counter,
            accepted_trial_count=trials,
            lambda_min_B=lmin,
            f_next=f_next,
        )

    while True:
        before = obj.counts()
        trial = build_trial(obj, p, basis, state.v_prev_norm, state.sigma_k, alpha,
                            config.hessian_variant, config.gradient_variant, f0=state.f_val)
        trials += 1
        g_norm = float(np.linalg.norm(trial.g))
        lmin = lambda_min(trial.B) if config.second_order_mode else None

        if alpha == first_alpha and g_norm <= config.eps_g:
            if not config.second_order_mode:
                _account(obj, before, 'converged')
                return record(trial, g_norm), replace(state, status=RunStatus.FIRST_ORDER_CONVERGED)
            if lmin >= -config.eps_H:
                _account(obj, before, 'converged')
                return record(trial, g_norm, lmin=lmin), replace(state, status=RunStatus.SECOND_ORDER_CONVERGED)

        model = CubicModel(f0=state.f_val, g=trial.g, B=trial.B, sigma_cub=math.ldexp(state.sigma_k, alpha))
        try:
            solution = solve_cubic(model, config.theta)
        except SubsolverError as e:
            logger.error(f"k={state.k} alpha={alpha}: {e}")
            _account(obj, before, 'subsolver_failure')
            return record(trial, g_norm, lmin=lmin), replace(state, status=RunStatus.SUBSOLVER_FAILURE)

        v_norm = solution.v_norm
        outcome = None
        if config.second_order_mode and not check_second_order(
                trial.B, math.ldexp(state.sigma_k, alpha - 1) * v_norm, config.theta * state.v_prev_norm):
            outcome = 'second_order_rejected'
        else:
            q = manifold.retract(p, basis.combine(solution.v))
            f_trial = obj.value(q)
            if accept_test(f_trial, state.f_val, state.sigma_k, alpha, state.v_prev_norm, v_norm):
                _account(obj, before, 'accepted')
                logger.debug(f"k={state.k} f={state.f_val:.10e} |g|={g_norm:.3e} |v|={v_norm:.3e} "
                             f"sigma={state.sigma_k:g} alpha={alpha}")
                new_state = SolverState(
                    k=state.k + 1,
                    point=q,
                    v_prev_norm=v_norm,
                    sigma_k=update_sigma(state.sigma_k, alpha),
                    f_val=f_trial,
                )
                if v_norm < STALL_STEP_NORM:
                    new_state.status = RunStatus.STALLED_STEP
                return record(trial, g_norm, v_norm, lmin, f_trial), new_state
            outcome = 'rejected'

        _account(obj, before, outcome)
        alpha += 1
        if alpha > config.max_alpha:
            logger.error(f"k={state.k}: alpha exceeded {config.max_alpha}")
            return record(trial, g_norm, lmin=lmin), replace(state, status=RunStatus.ALPHA_OVERFLOW)


def _account(obj: Objective, before, outcome: str):
    after = obj.counts()
    metrics.record_evaluations(after.f_calls - before.f_calls,
                               after.grad_calls - before.grad_calls,
                               after.hess_calls - before.hess_calls)
    metrics.record_trial(outcome)


def run(obj: Objective, manifold: Manifold, config: SolverConfig,
        p0: Optional[Point] = None) -> RunResult:
    """Run the method from p0 (or a seeded random point) until a stopping rule fires."""
    start = time.perf_counter()
    hessian_variant, gradient_variant = resolve_variants(
        obj, manifold, config.hessian_variant, config.gradient_variant)
    if (hessian_variant, gradient_variant) != (config.hessian_variant, config.gradient_variant):
        config = replace(config, hessian_variant=hessian_variant, gradient_variant=gradient_variant)

    p = p0 if p0 is not None else manifold.random_point(config.seed)
    v0 = config.v0_norm * manifold.random_tangent(p, (config.seed, V0_SEED_WORD))
    v0_norm = manifold.norm(p, v0)
    state = SolverState(k=1, point=p, v_prev_norm=v0_norm,
                        sigma_k=config.sigma1, f_val=obj.value(p))
    logger.info(f"Starting {obj.name} on {manifold}: n={manifold.intrinsic_dim}, "
                f"variant={hessian_variant.value}/{gradient_variant.value}, f0={state.f_val:.10e}")

    history: List[IterateRecord] = []
    status = RunStatus.MAX_ITERS
    while state.k <= config.max_outer_iters:
        entry, state = outer_step(state, obj, manifold, config)
        history.append(entry)
        if state.status is not None:
            status = state.status
            break

    elapsed = time.perf_counter() - start
    metrics.record_run(obj.name, elapsed, state.sigma_k)
    result = RunResult(status=status, final_point=state.point, history=history,
                       wall_time=elapsed, v0_norm=v0_norm)
    log = logger.info if status.converged else logger.warning
    log(f"{obj.name} on {manifold}: {status.value} after {result.iterations} iterations, "
        f"f={result.final_f:.10e}, |g|={result.final_g_norm:.3e}, {result.f_evals} f-evals")
    return result


def audit_history(result: RunResult, sigma1: float) -> List[str]:
    """Check the recorded run against the method's guarantees; returns violations.

    Checked: sigma_k >= sigma1 at every iteration, the acceptance inequality at every
    accepted step and sum_k |v_k|^3 <= 24 (f(p_1) - f(p_N)) / sigma1 + |v_0|^3.
    """
    violations = []
    accepted = [r for r in result.history if r.f_next is not None]
    for r in result.history:
        if r.sigma_k < sigma1:
            violations.append(f"k={r.k}: sigma_k={r.sigma_k} < sigma1={sigma1}")
    for r in accepted:
        slack = 1e-12 * (1.0 + abs(r.f_val))
        bound = r.f_val + r.sigma_k / 24.0 * r.v_prev_norm ** 3 \
            - math.ldexp(r.sigma_k, r.alpha_k) / 24.0 * r.v_norm ** 3
        if r.f_next > bound + slack:
            violations.append(f"k={r.k}: acceptance inequality violated ({r.f_next} > {bound})")

    if result.history:
        f_first = result.history[0].f_val
        total = sum(r.v_norm ** 3 for r in accepted)
        slack = 24.0 / sigma1 * 1e-12 * (1.0 + abs(f_first)) * max(len(accepted), 1)
        bound = 24.0 * (f_first - result.final_f) / sigma1 + result.v0_norm ** 3
        if total > bound + slack:
            violations.append(f"telescoped step bound violated ({total} > {bound})")
    return violations
