"""
Finite-difference surrogates for the gradient and Hessian in tangent-basis coordinates.

All formulas difference the pullback f o R_p (or f along geodesics and parallel
transport) along the orthonormal basis e_1..e_n of T_pM:

    g_i   = [f(R_p(h e_i)) - f(R_p(-h e_i))] / (2h)                       2n f-calls
    pullback   A_ij = [f^(h e_i + h e_j) - f^(h e_i) - f^(h e_j) + f(p)] / h^2
    transport  A_ij = [f(exp_{q_i}(P v_j)) - f(q_i) - f(q_j) + f(p)] / h^2,  q_i = exp_p(h e_i)
    gradcalls  A e_i = [G(p, h e_i) - grad f(p)] / h

and return B = (A + A^T) / 2.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from common.constants import H_CEIL, H_FLOOR
from common.errors import CapabilityError, DomainError
from common.records import GradientVariant, HessianVariant
from common.utils import setup_logger
from geometry.manifolds import Manifold, Point, TangentBasis, TangentVector
from .objective import Objective


logger = setup_logger('FDApprox')


@dataclass(frozen=True, eq=False)
class TrialApproximation:
    """Gradient and Hessian surrogates of one inner-loop trial."""
    alpha: int
    h: float
    g: np.ndarray
    B: np.ndarray
    f_evals_used: int
    grad_evals_used: int
    h_was_clamped: bool


def fd_step(v_prev_norm: float, sigma_k: float, alpha: int) -> Tuple[float, bool]:
    """Step h = |v_{k-1}| / (2^(alpha-1) sigma_k), clamped to [H_FLOOR, H_CEIL]."""
    if not sigma_k > 0:
        raise DomainError(f"sigma_k must be positive, got {sigma_k}")
    raw = v_prev_norm / math.ldexp(sigma_k, alpha - 1)
    h = max(H_FLOOR, min(raw, H_CEIL))
    return h, h != raw


def _pullback(obj: Objective, p: Point, direction: np.ndarray) -> float:
    manifold = p.manifold
    return obj.value(manifold.retract(p, TangentVector(p, direction)))


def fd_gradient(obj: Objective, p: Point, basis: TangentBasis, h: float) -> np.ndarray:
    if not h > 0:
        raise DomainError(f"Finite-difference step must be positive, got {h}")
    g = np.empty(basis.dim)
    for i, e in enumerate(basis.matrix):
        forward = _pullback(obj, p, h * e)
        backward = _pullback(obj, p, -h * e)
        g[i] = (forward - backward) / (2.0 * h)
    return g


def fd_hessian_pullback(obj: Objective, p: Point, basis: TangentBasis, h: float,
                        f0: Optional[float] = None) -> np.ndarray:
    """Second differences of the pullback; the diagonal uses f^(2h e_i)."""
    if not p.manifold.retraction_is_second_order:
        raise CapabilityError(f"{p.manifold} retraction is not second order")
    if f0 is None:
        f0 = obj.value(p)

    n = basis.dim
    E = basis.matrix
    singles = np.array([_pullback(obj, p, h * E[i]) for i in range(n)])
    A = np.empty((n, n))
    for i in range(n):
        A[i, i] = (_pullback(obj, p, 2.0 * h * E[i]) - 2.0 * singles[i] + f0) / h ** 2
        for j in range(i + 1, n):
            pair = _pullback(obj, p, h * E[i] + h * E[j])
            A[i, j] = A[j, i] = (pair - singles[i] - singles[j] + f0) / h ** 2
    return A


def fd_hessian_transport(obj: Objective, p: Point, basis: TangentBasis, h: float,
                         f0: Optional[float] = None) -> np.ndarray:
    manifold = p.manifold
    if not (manifold.has_exp and manifold.has_transport):
        raise CapabilityError(f"{manifold} lacks exp or parallel transport")
    if f0 is None:
        f0 = obj.value(p)

    n = basis.dim
    steps = [basis.vector(i, h) for i in range(n)]
    q = [manifold.exp(p, v) for v in steps]
    f_q = np.array([obj.value(qi) for qi in q])
    A = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            moved = manifold.transport(p, steps[i], steps[j], q=q[i])
            A[i, j] = (obj.value(manifold.exp(q[i], moved)) - f_q[i] - f_q[j] + f0) / h ** 2
    return 0.5 * (A + A.T)


def fd_hessian_gradcalls(obj: Objective, p: Point, basis: TangentBasis, h: float,
                         grad_p: Optional[TangentVector] = None) -> np.ndarray:
    """Forward differences of the exact gradient brought back to T_pM.

    Uses inverse parallel transport along exp when the manifold has it and the
    projection onto T_pM of grad f(R_p(h e_i)) otherwise.
    """
    if not obj.has_gradient:
        raise CapabilityError(f"{obj.name} has no exact gradient")
    manifold = p.manifold
    if grad_p is None:
        grad_p = obj.gradient(p)
    g0 = basis.coordinates(grad_p)

    n = basis.dim
    A = np.empty((n, n))
    for i in range(n):
        v = basis.vector(i, h)
        if manifold.has_transport:
            moved = manifold.inverse_transport(p, v, obj.gradient(manifold.exp(p, v)))
        else:
            moved = manifold.project_tangent(p, obj.gradient(manifold.retract(p, v)).coords)
        A[:, i] = (basis.coordinates(moved) - g0) / h
    return 0.5 * (A + A.T)


def exact_hessian_matrix(obj: Objective, p: Point, basis: TangentBasis) -> np.ndarray:
    n = basis.dim
    A = np.empty((n, n))
    for i, e in enumerate(basis.vectors):
        A[:, i] = basis.coordinates(obj.hessian(p, e))
    return 0.5 * (A + A.T)


def resolve_variants(obj: Objective, manifold: Manifold, hessian_variant: HessianVariant,
                     gradient_variant: GradientVariant) -> Tuple[HessianVariant, GradientVariant]:
    """Fall back to FD gradient + pullback Hessian when a requested variant is unavailable."""
    missing = []
    if gradient_variant is GradientVariant.EXACT and not obj.has_gradient:
        missing.append('exact gradient')
    if hessian_variant is HessianVariant.EXACT and not obj.has_hessian:
        missing.append('exact Hessian')
    if hessian_variant is HessianVariant.GRAD_CALLS and not obj.has_gradient:
        missing.append('exact gradient for gradient-call Hessian')
    if hessian_variant is HessianVariant.TRANSPORT and not (manifold.has_exp and manifold.has_transport):
        missing.append(f'exp/transport on {manifold}')

    if not missing:
        return hessian_variant, gradient_variant
    logger.warning(f"{obj.name} on {manifold}: no {', '.join(missing)}; "
                   f"falling back to FD gradient with pullback Hessian")
    return HessianVariant.PULLBACK, GradientVariant.FD


def build_trial(obj: Objective, p: Point, basis: TangentBasis, v_prev_norm: float,
                sigma_k: float, alpha: int, hessian_variant: HessianVariant,
                gradient_variant: GradientVariant, f0: float) -> TrialApproximation:
    """Compute (g, B) for trial alpha; f0 = f(p) is supplied by the caller."""
    h, clamped = fd_step(v_prev_norm, sigma_k, alpha)
    if clamped:
        logger.debug(f"Step clamped to h={h:.3e} at alpha={alpha}")
    before = obj.counts()

    grad_p = None
    if gradient_variant is GradientVariant.EXACT:
        grad_p = obj.gradient(p)
        g = basis.coordinates(grad_p)
    else:
        g = fd_gradient(obj, p, basis, h)

    if hessian_variant is HessianVariant.PULLBACK:
        B = fd_hessian_pullback(obj, p, basis, h, f0=f0)
    elif hessian_variant is HessianVariant.TRANSPORT:
        B = fd_hessian_transport(obj, p, basis, h, f0=f0)
    elif hessian_variant is HessianVariant.GRAD_CALLS:
        B = fd_hessian_gradcalls(obj, p, basis, h, grad_p=grad_p)
    else:
        B = exact_hessian_matrix(obj, p, basis)

    after = obj.counts()
    return TrialApproximation(
        alpha=alpha,
        h=h,
        g=g,
        B=B,
        f_evals_used=after.f_calls - before.f_calls,
        grad_evals_used=after.grad_calls - before.grad_calls,
        h_was_clamped=clamped,
    )
