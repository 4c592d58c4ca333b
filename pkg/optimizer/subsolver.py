"""
Cubic subproblem solver.

The global minimizer of m(v) = f0 + <g, v> + 1/2 <v, Bv> + (sigma/6)|v|^3 satisfies

    (B + lam I) v = -g,   lam = (sigma/2) |v|,   B + lam I positive semidefinite.

In the eigenbasis of B this reduces to a scalar root problem in lam, solved by a
bracketed Newton iteration. Nonlinear conjugate gradients (Polak-Ribiere+) is kept
as a fallback when the secular solution misses the stationarity target.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from common.constants import CG_BUDGET, HARD_CASE_RTOL, SECULAR_MAX_ITERS, SECULAR_RTOL
from common.errors import NumericalError, SubsolverError
from common.utils import setup_logger
from geometry.numkernel import lambda_min, sym_eig
from .model import CubicModel, eval_model, grad_model


logger = setup_logger('Subsolver')

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 60
STATIONARITY_ROUNDING = 64


class SubproblemStatus(Enum):
    GLOBAL_SECULAR = "GlobalSecular"
    CG_FALLBACK = "CGFallback"


@dataclass(frozen=True, eq=False)
class SubproblemSolution:
    v: np.ndarray
    model_value: float
    grad_norm: float
    multiplier: float
    status: SubproblemStatus

    @property
    def v_norm(self) -> float:
        return float(np.linalg.norm(self.v))


def _solution(m: CubicModel, v: np.ndarray, multiplier: float,
              status: SubproblemStatus) -> SubproblemSolution:
    return SubproblemSolution(
        v=v,
        model_value=eval_model(m, v),
        grad_norm=float(np.linalg.norm(grad_model(m, v))),
        multiplier=multiplier,
        status=status,
    )


def _rounding_residual(m: CubicModel, v: np.ndarray) -> float:
    """Gradient residual left at the secular minimizer by rounding and the root tolerance."""
    v_norm = np.linalg.norm(v)
    g_norm = np.linalg.norm(m.g)
    scale = g_norm + np.linalg.norm(m.B, 2) * v_norm + m.sigma_cub * v_norm ** 2
    root = 0.5 * m.sigma_cub * v_norm * SECULAR_RTOL * min(v_norm, 1.0 + g_norm)
    dropped = HARD_CASE_RTOL * np.sqrt(m.n) * g_norm
    return STATIONARITY_ROUNDING * np.sqrt(m.n) * np.finfo(float).eps * scale + root + dropped


def _meets_conditions(m: CubicModel, sol: SubproblemSolution, theta: float) -> bool:
    """Model decrease and stationarity; the exact minimizer may carry a rounding-level residual."""
    target = theta * sol.v_norm ** 2
    if sol.status is SubproblemStatus.GLOBAL_SECULAR:
        target += _rounding_residual(m, sol.v)
    return sol.model_value <= m.f0 and sol.grad_norm <= target


def secular_solve(eigs, g_hat, sigma_cub: float) -> Tuple[float, np.ndarray]:
    """Solve |(Lambda + lam I)^-1 g_hat| = 2 lam / sigma_cub for lam >= max(0, -lambda_min).

    Returns lam and the minimizer in eigenbasis coordinates. In the hard case (no
    pole at the lower bracket end and the root below it) a component along the first
    eigenvector is added so that |v| = 2 lam / sigma_cub.
    """
    eigs = np.asarray(eigs, dtype=float)
    g_hat = np.array(g_hat, dtype=float)
    g_norm = np.linalg.norm(g_hat)
    g_hat[np.abs(g_hat) <= HARD_CASE_RTOL * g_norm] = 0.0
    lower = max(0.0, -eigs[0])

    def step(lam: float) -> np.ndarray:
        shifted = eigs + lam
        w = np.zeros_like(g_hat)
        active = g_hat != 0.0
        w[active] = -g_hat[active] / shifted[active]
        return w

    pole = np.any((g_hat != 0.0) & (eigs + lower <= 0.0))
    if not pole:
        w = step(lower)
        radius = 2.0 * lower / sigma_cub
        w_norm = np.linalg.norm(w)
        if w_norm <= radius:
            if lower == 0.0:
                return 0.0, w
            # hard case
            w[0] += np.sqrt(max(radius ** 2 - w_norm ** 2, 0.0))
            return lower, w

    hi = max(1.0, 2.0 * lower)
    for _ in range(SECULAR_MAX_ITERS):
        if np.linalg.norm(step(hi)) <= 2.0 * hi / sigma_cub:
            break
        hi *= 2.0
    else:
        raise NumericalError("Could not bracket the secular equation root")

    lo, lam = lower, hi
    for _ in range(SECULAR_MAX_ITERS):
        w = step(lam)
        w_norm = np.linalg.norm(w)
        phi = w_norm - 2.0 * lam / sigma_cub
        if abs(phi) <= SECULAR_RTOL * min(w_norm, 1.0 + g_norm) or hi - lo <= 4 * np.finfo(float).eps * hi:
            return lam, w
        if phi > 0:
            lo = lam
        else:
            hi = lam

        # Newton on psi(lam) = 1/|w| - sigma/(2 lam), which is concave and increasing.
        psi = 1.0 / w_norm - 0.5 * sigma_cub / lam
        shifted = eigs + lam
        d_psi = np.sum(g_hat ** 2 / shifted ** 3) / w_norm ** 3 + 0.5 * sigma_cub / lam ** 2
        candidate = lam - psi / d_psi
        lam = candidate if lo < candidate < hi else 0.5 * (lo + hi)
    raise NumericalError(f"Secular iteration did not converge after {SECULAR_MAX_ITERS} steps")


def _line_search(m: CubicModel, v: np.ndarray, d: np.ndarray, grad: np.ndarray) -> float:
    """Armijo backtracking starting from the Newton step of the model along d."""
    slope = grad @ d
    norm_v = np.linalg.norm(v)
    curvature = d @ (m.B @ d) + 0.5 * m.sigma_cub * norm_v * (d @ d)
    if norm_v > 0:
        curvature += 0.5 * m.sigma_cub * (v @ d) ** 2 / norm_v
    t = -slope / curvature if curvature > 0 else 1.0 / max(np.linalg.norm(d), 1e-300)

    base = eval_model(m, v)
    for _ in range(MAX_BACKTRACKS):
        if eval_model(m, v + t * d) <= base + ARMIJO_C1 * t * slope:
            return t
        t *= 0.5
    return 0.0


def cg_fallback(m: CubicModel, theta: float, v_init, budget: int = CG_BUDGET) -> SubproblemSolution:
    """Polak-Ribiere+ nonlinear CG on the model, started at v_init when it does not increase m."""
    v = np.array(v_init, dtype=float)
    if eval_model(m, v) > m.f0:
        v = np.zeros(m.n)

    grad = grad_model(m, v)
    d = -grad
    for _ in range(budget):
        grad_norm = np.linalg.norm(grad)
        if grad_norm <= theta * np.linalg.norm(v) ** 2:
            return _solution(m, v, 0.5 * m.sigma_cub * np.linalg.norm(v), SubproblemStatus.CG_FALLBACK)
        if grad @ d >= 0:
            d = -grad
        t = _line_search(m, v, d, grad)
        if t == 0.0:
            break
        v = v + t * d
        grad_new = grad_model(m, v)
        beta = max(0.0, grad_new @ (grad_new - grad) / (grad @ grad))
        d = -grad_new + beta * d
        grad = grad_new

    raise SubsolverError("Conjugate gradient fallback did not reach the stationarity target",
                         float(np.linalg.norm(grad)), theta * float(np.linalg.norm(v)) ** 2)


def solve_cubic(m: CubicModel, theta: float) -> SubproblemSolution:
    """Approximate minimizer satisfying m(v) <= f0 and |grad m(v)| <= theta |v|^2."""
    eig = sym_eig(m.B)
    try:
        lam, v_hat = secular_solve(eig.eigenvalues, eig.eigenvectors.T @ m.g, m.sigma_cub)
    except NumericalError as e:
        logger.warning(f"Secular solve failed ({e}); using conjugate gradients")
        return cg_fallback(m, theta, np.zeros(m.n))

    solution = _solution(m, eig.eigenvectors @ v_hat, lam, SubproblemStatus.GLOBAL_SECULAR)
    if _meets_conditions(m, solution, theta):
        return solution
    logger.info(f"Secular solution misses the stationarity target "
                f"({solution.grad_norm:.3e} > {theta * solution.v_norm ** 2:.3e}); refining with CG")
    return cg_fallback(m, theta, solution.v)


def check_second_order(B, sigma_half_v: float, theta_v_prev: float) -> bool:
    """True iff lambda_min(B) >= -(2^(alpha-1) sigma_k |v| + theta |v_{k-1}|)."""
    return lambda_min(B) >= -(sigma_half_v + theta_v_prev)
