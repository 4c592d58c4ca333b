"""
Cubic model m(v) = f0 + <g, v> + 1/2 <v, Bv> + (sigma_cub / 6) |v|^3 in basis coordinates.
"""
from dataclasses import dataclass

import numpy as np

from common.errors import DimensionError, DomainError


@dataclass(frozen=True, eq=False)
class CubicModel:
    f0: float
    g: np.ndarray
    B: np.ndarray
    sigma_cub: float

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if g.ndim != 1 or B.shape != (g.size, g.size):
            raise DimensionError(f"Model needs g of length n and B of shape (n, n), got {g.shape}, {B.shape}")
        if not (np.isfinite(self.f0) and np.all(np.isfinite(g)) and np.all(np.isfinite(B))):
            raise DomainError("Model data must be finite")
        if not self.sigma_cub > 0:
            raise DomainError(f"sigma_cub must be positive, got {self.sigma_cub}")
        if B.size and np.max(np.abs(B - B.T)) > 1e-12 * (1.0 + np.max(np.abs(B))):
            raise DomainError("Model matrix B is not symmetric")
        object.__setattr__(self, 'g', g)
        object.__setattr__(self, 'B', B)

    @property
    def n(self) -> int:
        return self.g.size


def _check_length(m: CubicModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (m.n,):
        raise DimensionError(f"Expected a vector of length {m.n}, got shape {v.shape}")
    return v


def eval_model(m: CubicModel, v) -> float:
    v = _check_length(m, v)
    norm_v = np.linalg.norm(v)
    return float(m.f0 + (m.g @ v + 0.5 * v @ (m.B @ v) + m.sigma_cub / 6.0 * norm_v ** 3))


def grad_model(m: CubicModel, v) -> np.ndarray:
    v = _check_length(m, v)
    return m.g + m.B @ v + 0.5 * m.sigma_cub * np.linalg.norm(v) * v
