"""
Objective function wrapper with evaluation accounting.
"""
import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from common.errors import CapabilityError, EvaluationError
from geometry.manifolds import Point, TangentVector


ValueFn = Callable[[Point], float]
GradientFn = Callable[[Point], TangentVector]
HessianFn = Callable[[Point, TangentVector], TangentVector]


@dataclass(frozen=True)
class EvaluationCounts:
    f_calls: int
    grad_calls: int
    hess_calls: int


class Objective:
    """Smooth cost f on a manifold, optionally with its Riemannian gradient and Hessian.

    Every call is counted; the counters are lock protected so that finite-difference
    evaluations may run on several threads.
    """

    def __init__(self, f: ValueFn, exact_grad: Optional[GradientFn] = None,
                 exact_hess: Optional[HessianFn] = None, name: str = 'objective'):
        self._f = f
        self._grad = exact_grad
        self._hess = exact_hess
        self.name = name
        self._lock = threading.Lock()
        self._f_calls = 0
        self._grad_calls = 0
        self._hess_calls = 0

    @property
    def has_gradient(self) -> bool:
        return self._grad is not None

    @property
    def has_hessian(self) -> bool:
        return self._hess is not None

    @property
    def eval_counter(self) -> int:
        with self._lock:
            return self._f_calls

    def counts(self) -> EvaluationCounts:
        with self._lock:
            return EvaluationCounts(self._f_calls, self._grad_calls, self._hess_calls)

    def reset_counters(self):
        with self._lock:
            self._f_calls = self._grad_calls = self._hess_calls = 0

    def value(self, p: Point) -> float:
        with self._lock:
            self._f_calls += 1
        result = float(self._f(p))
        if not math.isfinite(result):
            raise EvaluationError(f"{self.name} returned {result}", point=p)
        return result

    def gradient(self, p: Point) -> TangentVector:
        if self._grad is None:
            raise CapabilityError(f"{self.name} has no exact gradient")
        with self._lock:
            self._grad_calls += 1
        result = self._grad(p)
        if not np.all(np.isfinite(result.coords)):
            raise EvaluationError(f"{self.name} gradient is not finite", point=p)
        return result

    def hessian(self, p: Point, u: TangentVector) -> TangentVector:
        if self._hess is None:
            raise CapabilityError(f"{self.name} has no exact Hessian")
        with self._lock:
            self._hess_calls += 1
        result = self._hess(p, u)
        if not np.all(np.isfinite(result.coords)):
            raise EvaluationError(f"{self.name} Hessian is not finite", point=p)
        return result
