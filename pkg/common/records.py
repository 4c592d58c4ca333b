"""
Run records exchanged between the solver, the benchmark harness and the CLI.
"""
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Dict, Optional


class RunStatus(Enum):
    FIRST_ORDER_CONVERGED = "FirstOrderConverged"
    SECOND_ORDER_CONVERGED = "SecondOrderConverged"
    MAX_ITERS = "MaxIters"
    STALLED_STEP = "StalledStep"
    SUBSOLVER_FAILURE = "SubsolverFailure"
    ALPHA_OVERFLOW = "AlphaOverflow"
    # Run aborted by an evaluation or numerical error; OFV and g_norm_final are null.
    ERROR = "Error"

    @property
    def converged(self) -> bool:
        return self in (RunStatus.FIRST_ORDER_CONVERGED, RunStatus.SECOND_ORDER_CONVERGED)


class HessianVariant(Enum):
    PULLBACK = "pullback"
    TRANSPORT = "transport"
    GRAD_CALLS = "gradcalls"
    EXACT = "exact"


class GradientVariant(Enum):
    FD = "fd"
    EXACT = "exact"


@dataclass
class IterateRecord:
    """One outer iteration of the solver.

    ``f_next`` is f(p_{k+1}) for an accepted step and ``None`` on the
    terminating iteration, where no step is taken (``v_norm`` is then 0).
    """
    k: int
    f_val: float
    g_norm: float
    v_norm: float
    v_prev_norm: float
    sigma_k: float
    alpha_k: int
    h: float
    h_clamped: bool
    f_evals_cum: int
    accepted_trial_count: int
    lambda_min_B: Optional[float] = None
    f_next: Optional[float] = None

    def csv_row(self) -> Dict:
        """Values for the per-iteration CSV, keyed by header column."""
        return {
            'k': self.k,
            'f': self.f_val,
            'g_norm': self.g_norm,
            'v_norm': self.v_norm,
            'sigma': self.sigma_k,
            'alpha': self.alpha_k,
            'h': self.h,
            'h_clamped': int(self.h_clamped),
            'f_evals_cum': self.f_evals_cum,
        }


@dataclass
class RunReport:
    """Summary row of one run (objective value, gradient norm, iteration count...)."""
    problem_name: str
    manifold_string: str
    OFV: Optional[float]
    g_norm_final: Optional[float]
    iters: int
    f_evals: int
    wall_ms: float
    status: str

    def to_dict(self, include_timing: bool = True) -> Dict:
        data = asdict(self)
        if not include_timing:
            data.pop('wall_ms')
        return data
