"""
Dense linear-algebra primitives used by the manifolds and the cubic subproblem solver.

Thin wrappers around LAPACK (through scipy.linalg) that validate their inputs and fix
sign conventions so that outputs are deterministic.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from common.constants import RANK_TOL, SYMMETRY_TOL
from common.errors import DimensionError, DomainError, RankError


@dataclass(frozen=True)
class SymEigResult:
    """Eigenvalues in ascending order with orthonormal eigenvectors as columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


def _as_finite_matrix(M, name: str = 'matrix') -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def _fix_column_signs(Q: np.ndarray) -> np.ndarray:
    """Flip columns so that the first nonzero component of each is nonnegative."""
    if Q.size == 0:
        return np.ones(Q.shape[1])
    nonzero = np.abs(Q) > 0
    first = np.argmax(nonzero, axis=0)
    leading = Q[first, np.arange(Q.shape[1])]
    return np.where(leading < 0, -1.0, 1.0)


def sym_eig(S) -> SymEigResult:
    """Eigendecomposition of a symmetric matrix (symmetrized internally as (S+S^T)/2)."""
    S = _as_finite_matrix(S, 'S')
    if S.shape[0] != S.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got {S.shape}")
    scale = 1.0 + (np.max(np.abs(S)) if S.size else 0.0)
    if S.size and np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise DomainError("sym_eig input is not symmetric")

    S = 0.5 * (S + S.T)
    eigenvalues, eigenvectors = scipy.linalg.eigh(S)
    eigenvectors = eigenvectors * _fix_column_signs(eigenvectors)
    return SymEigResult(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def lambda_min(S) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    if np.asarray(S).size == 0:
        return 0.0
    return sym_eig(S).lambda_min


def qr_thin(M) -> Tuple[np.ndarray, np.ndarray]:
    """Thin QR with positive diagonal in R. Requires full column rank."""
    M = _as_finite_matrix(M, 'M')
    rows, cols = M.shape
    if rows < cols:
        raise DimensionError(f"qr_thin needs rows >= cols, got {M.shape}")

    Q, R = scipy.linalg.qr(M, mode='economic')
    diag = np.abs(np.diag(R))
    largest = diag.max() if diag.size else 0.0
    for column, value in enumerate(diag):
        if value <= RANK_TOL * largest or largest == 0.0:
            raise RankError(f"qr_thin input is rank deficient at column {column}", column)

    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def svd_thin(M) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD M = U diag(S) V^T with S descending.

    Each column of U is signed so that its first nonzero component is nonnegative,
    V is flipped accordingly.
    """
    M = _as_finite_matrix(M, 'M')
    U, S, Vt = scipy.linalg.svd(M, full_matrices=False)
    signs = _fix_column_signs(U)
    return U * signs, S, Vt.T * signs


def polar_factor(M) -> np.ndarray:
    """Orthonormal polar factor U V^T of a full-column-rank matrix."""
    U, _, V = svd_thin(M)
    return U @ V.T


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)
