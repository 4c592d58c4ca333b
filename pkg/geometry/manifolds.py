"""
Matrix manifolds embedded in Euclidean space.

Points and tangent vectors are stored in ambient coordinates (numpy arrays of the
manifold's ``ambient_shape``). Every manifold uses the metric induced by the
Frobenius inner product of the ambient space; for the Grassmann manifold tangent
vectors are horizontal lifts (X^T V = 0) at an orthonormal representative.

Retractions:
    Sphere, Oblique, Grassmann, Euclidean  exponential map (closed form)
    Stiefel                                polar retraction (second order)
    Product                                componentwise
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from common.constants import BASIS_DISCARD_TOL
from common.errors import CapabilityError, DimensionError, DomainError, GeometryError, UsageError
from common.utils import SeedLike, make_rng, setup_logger
from .numkernel import polar_factor, qr_thin, svd_thin, sym


logger = setup_logger('Manifolds')

FEASIBILITY_TOL = 1e-10


class ManifoldKind(Enum):
    SPHERE = "Sp"
    OBLIQUE = "Ob"
    STIEFEL = "St"
    GRASSMANN = "Gr"
    PRODUCT = "Product"
    EUCLIDEAN = "R"


@dataclass(frozen=True)
class Capabilities:
    has_exp: bool
    has_transport: bool
    retraction_is_second_order: bool


@dataclass(frozen=True, eq=False)
class Point:
    manifold: 'Manifold'
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: Point
    coords: np.ndarray

    # numpy scalars defer to __rmul__ instead of broadcasting over the object
    __array_ufunc__ = None

    def __mul__(self, scalar: float) -> 'TangentVector':
        return TangentVector(self.base, scalar * self.coords)

    __rmul__ = __mul__

    def __neg__(self) -> 'TangentVector':
        return TangentVector(self.base, -self.coords)

    def __add__(self, other: 'TangentVector') -> 'TangentVector':
        _check_same_base(self.base, other.base)
        return TangentVector(self.base, self.coords + other.coords)

    def __sub__(self, other: 'TangentVector') -> 'TangentVector':
        _check_same_base(self.base, other.base)
        return TangentVector(self.base, self.coords - other.coords)


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Orthonormal basis of T_pM, stored as an array of shape (n, *ambient_shape)."""
    base: Point
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> List[TangentVector]:
        return [TangentVector(self.base, e) for e in self.matrix]

    def vector(self, i: int, scale: float = 1.0) -> TangentVector:
        return TangentVector(self.base, scale * self.matrix[i])

    def combine(self, coeffs) -> TangentVector:
        """Tangent vector sum_i coeffs[i] e_i."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise DimensionError(f"Expected {self.dim} coefficients, got shape {coeffs.shape}")
        return TangentVector(self.base, np.tensordot(coeffs, self.matrix, axes=1))

    def coordinates(self, u: TangentVector) -> np.ndarray:
        """Coefficients <e_i, u> of a tangent vector at the basis point."""
        _check_same_base(self.base, u.base)
        flat = self.matrix.reshape(self.dim, -1)
        return flat @ u.coords.ravel()

    def gram(self) -> np.ndarray:
        flat = self.matrix.reshape(self.dim, -1)
        return flat @ flat.T


def _check_same_base(p: Point, q: Point):
    if p is q:
        return
    if p.manifold is not q.manifold or not np.array_equal(p.coords, q.coords):
        raise UsageError("Tangent vectors are based at different points")


# Row-wise sphere geometry (last axis), shared by Sphere and Oblique.

def _rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1, keepdims=True)


def _sphere_project(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return w - x * _rowdot(x, w)


def _sphere_direction(v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(nv > 0, nv, 1.0)
    return nv, v / safe


def _sphere_exp(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    nv, direction = _sphere_direction(v)
    y = np.cos(nv) * x + np.sin(nv) * direction
    return y / np.linalg.norm(y, axis=-1, keepdims=True)


def _sphere_rotate(x: np.ndarray, v: np.ndarray, u: np.ndarray, inverse: bool) -> np.ndarray:
    """Apply the rotation of span(x, v) carrying x to exp_x(v) (or its inverse) to u."""
    nv, direction = _sphere_direction(v)
    c, s = np.cos(nv), np.sin(nv)
    a, b = _rowdot(x, u), _rowdot(direction, u)
    if inverse:
        s = -s
    return u + (c * a - s * b - a) * x + (s * a + c * b - b) * direction


class Manifold(ABC):
    """Riemannian submanifold of a Euclidean space of shape ``ambient_shape``."""

    kind: ManifoldKind
    capabilities: Capabilities

    def __init__(self, ambient_shape: Tuple[int, ...], intrinsic_dim: int, expected_dim: int):
        if intrinsic_dim != expected_dim:
            raise GeometryError(f"{self}: intrinsic dimension {intrinsic_dim} != {expected_dim}")
        if intrinsic_dim < 1:
            raise DomainError(f"{self} has dimension {intrinsic_dim}; nothing to optimize")
        self.ambient_shape = tuple(ambient_shape)
        self.intrinsic_dim = intrinsic_dim

    @property
    def has_exp(self) -> bool:
        return self.capabilities.has_exp

    @property
    def has_transport(self) -> bool:
        return self.capabilities.has_transport

    @property
    def retraction_is_second_order(self) -> bool:
        return self.capabilities.retraction_is_second_order

    # Array-level geometry implemented by each manifold.

    @abstractmethod
    def feasibility_residual(self, x: np.ndarray) -> float:
        """Max-norm violation of the defining equations at x."""

    @abstractmethod
    def _project(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _retract(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        ...

    def _exp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self} has no exponential map")

    def _transport(self, x: np.ndarray, v: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self} has no parallel transport")

    def _inverse_transport(self, x: np.ndarray, v: np.ndarray, w: np.ndarray,
                           q: np.ndarray) -> np.ndarray:
        # Transport back along the reversed geodesic from q.
        velocity = self._transport(x, v, v)
        return self._project(x, self._transport(q, -velocity, w))

    @abstractmethod
    def _random_array(self, rng: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def _weingarten(self, x: np.ndarray, egrad: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Curvature term of Hess f(x)[u], added before the final projection."""

    # Public API on Point / TangentVector values.

    def point(self, coords) -> Point:
        coords = np.array(coords, dtype=float)
        self._check_shape(coords)
        residual = self.feasibility_residual(coords)
        if residual > FEASIBILITY_TOL:
            raise DomainError(f"Point is not on {self} (residual {residual:.2e})")
        return Point(self, coords)

    def tangent(self, p: Point, coords) -> TangentVector:
        coords = np.array(coords, dtype=float)
        self._check_shape(coords)
        return TangentVector(p, coords)

    def zero_vector(self, p: Point) -> TangentVector:
        return TangentVector(p, np.zeros(self.ambient_shape))

    def project_tangent(self, p: Point, w) -> TangentVector:
        w = np.asarray(w, dtype=float)
        self._check_shape(w)
        return TangentVector(p, self._project(p.coords, w))

    def tangency_residual(self, u: TangentVector) -> float:
        return float(np.max(np.abs(self._project(u.base.coords, u.coords) - u.coords)))

    def inner(self, p: Point, u: TangentVector, v: TangentVector) -> float:
        _check_same_base(p, u.base)
        _check_same_base(p, v.base)
        return float(np.vdot(u.coords, v.coords))

    def norm(self, p: Point, u: TangentVector) -> float:
        return float(np.sqrt(max(self.inner(p, u, u), 0.0)))

    def retract(self, p: Point, v: TangentVector) -> Point:
        _check_same_base(p, v.base)
        if not np.any(v.coords):
            return p
        return Point(self, self._retract(p.coords, v.coords))

    def exp(self, p: Point, v: TangentVector) -> Point:
        if not self.has_exp:
            raise CapabilityError(f"{self} has no exponential map")
        _check_same_base(p, v.base)
        if not np.any(v.coords):
            return p
        return Point(self, self._exp(p.coords, v.coords))

    def transport(self, p: Point, v: TangentVector, u: TangentVector,
                  q: Optional[Point] = None) -> TangentVector:
        """Parallel transport of u along t -> exp_p(tv), t in [0, 1]."""
        if not self.has_transport:
            raise CapabilityError(f"{self} has no parallel transport")
        _check_same_base(p, v.base)
        _check_same_base(p, u.base)
        if q is None:
            q = self.exp(p, v)
        if not np.any(v.coords):
            return TangentVector(q, u.coords.copy())
        return TangentVector(q, self._transport(p.coords, v.coords, u.coords))

    def inverse_transport(self, p: Point, v: TangentVector, w: TangentVector) -> TangentVector:
        """Inverse of ``transport``: carries w from T_{exp_p v}M back to T_pM."""
        if not self.has_transport:
            raise CapabilityError(f"{self} has no parallel transport")
        _check_same_base(p, v.base)
        if not np.any(v.coords):
            return TangentVector(p, w.coords.copy())
        q = w.base.coords
        return TangentVector(p, self._inverse_transport(p.coords, v.coords, w.coords, q))

    def tangent_basis(self, p: Point) -> TangentBasis:
        """Orthonormal basis of T_pM from projected canonical ambient directions.

        Candidates are visited in ambient index order, orthogonalized (Gram-Schmidt
        applied twice) against the accepted vectors and discarded when their residual
        is below the discard tolerance.
        """
        n = self.intrinsic_dim
        size = int(np.prod(self.ambient_shape))
        accepted = np.zeros((n, size))
        count = 0
        for index in range(size):
            candidate = np.zeros(size)
            candidate[index] = 1.0
            w = self._project(p.coords, candidate.reshape(self.ambient_shape)).ravel()
            if count:
                block = accepted[:count]
                w = w - block.T @ (block @ w)
                w = w - block.T @ (block @ w)
            norm_w = np.linalg.norm(w)
            if norm_w < BASIS_DISCARD_TOL:
                continue
            accepted[count] = w / norm_w
            count += 1
            if count == n:
                break
        if count < n:
            raise GeometryError(f"Found only {count} of {n} tangent directions on {self}")
        return TangentBasis(p, accepted.reshape((n,) + self.ambient_shape))

    def random_point(self, seed: SeedLike) -> Point:
        return Point(self, self._random_array(make_rng(seed)))

    def random_tangent(self, p: Point, seed: SeedLike) -> TangentVector:
        """Unit-norm tangent vector at p drawn from a projected Gaussian."""
        rng = make_rng(seed)
        while True:
            w = self._project(p.coords, rng.standard_normal(self.ambient_shape))
            norm_w = np.linalg.norm(w)
            if norm_w > BASIS_DISCARD_TOL:
                return TangentVector(p, w / norm_w)

    def egrad_to_rgrad(self, p: Point, egrad) -> TangentVector:
        return TangentVector(p, self._project(p.coords, np.asarray(egrad, dtype=float)))

    def ehess_to_rhess(self, p: Point, egrad, ehess, u: TangentVector) -> TangentVector:
        """Riemannian Hessian along u from the Euclidean gradient and Hessian-vector product."""
        x = p.coords
        corrected = np.asarray(ehess, dtype=float) + self._weingarten(x, np.asarray(egrad), u.coords)
        return TangentVector(p, self._project(x, corrected))

    def _check_shape(self, w: np.ndarray):
        if w.shape != self.ambient_shape:
            raise DimensionError(f"Expected shape {self.ambient_shape} on {self}, got {w.shape}")


class Euclidean(Manifold):
    """Flat R^n with the identity retraction."""

    kind = ManifoldKind.EUCLIDEAN
    capabilities = Capabilities(has_exp=True, has_transport=True, retraction_is_second_order=True)

    def __init__(self, n: int):
        self.n = n
        super().__init__((n,), n, n)

    def __repr__(self):
        return f"R({self.n})"

    def feasibility_residual(self, x):
        return 0.0

    def _project(self, x, w):
        return np.array(w, dtype=float)

    def _retract(self, x, v):
        return x + v

    _exp = _retract

    def _transport(self, x, v, u):
        return np.array(u, dtype=float)

    def _inverse_transport(self, x, v, w, q):
        return np.array(w, dtype=float)

    def _random_array(self, rng):
        return rng.standard_normal(self.n)

    def _weingarten(self, x, egrad, u):
        return np.zeros_like(u)


class Sphere(Manifold):
    """Unit sphere Sp(r) in R^r; retraction is the exponential map."""

    kind = ManifoldKind.SPHERE
    capabilities = Capabilities(has_exp=True, has_transport=True, retraction_is_second_order=True)

    def __init__(self, r: int):
        self.r = r
        super().__init__((r,), r - 1, r - 1)

    def __repr__(self):
        return f"Sp({self.r})"

    def feasibility_residual(self, x):
        return float(abs(np.linalg.norm(x) - 1.0))

    def _project(self, x, w):
        return _sphere_project(x, w)

    def _exp(self, x, v):
        return _sphere_exp(x, v)

    _retract = _exp

    def _transport(self, x, v, u):
        return _sphere_rotate(x, v, u, inverse=False)

    def _inverse_transport(self, x, v, w, q):
        return _sphere_rotate(x, v, w, inverse=True)

    def _random_array(self, rng):
        x = rng.standard_normal(self.r)
        return x / np.linalg.norm(x)

    def _weingarten(self, x, egrad, u):
        return -float(x @ egrad) * u


class Oblique(Manifold):
    """Ob(r, t): r x t matrices with unit-norm rows, i.e. a product of r spheres Sp(t)."""

    kind = ManifoldKind.OBLIQUE
    capabilities = Capabilities(has_exp=True, has_transport=True, retraction_is_second_order=True)

    def __init__(self, r: int, t: int):
        self.r, self.t = r, t
        super().__init__((r, t), r * t - r, r * (t - 1))

    def __repr__(self):
        return f"Ob({self.r},{self.t})"

    def feasibility_residual(self, x):
        return float(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)))

    def _project(self, x, w):
        return _sphere_project(x, w)

    def _exp(self, x, v):
        return _sphere_exp(x, v)

    _retract = _exp

    def _transport(self, x, v, u):
        return _sphere_rotate(x, v, u, inverse=False)

    def _inverse_transport(self, x, v, w, q):
        return _sphere_rotate(x, v, w, inverse=True)

    def _random_array(self, rng):
        x = rng.standard_normal((self.r, self.t))
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def _weingarten(self, x, egrad, u):
        return -_rowdot(x, egrad) * u


class Stiefel(Manifold):
    """St(r, t): r x t matrices with orthonormal columns; polar retraction, no transport."""

    kind = ManifoldKind.STIEFEL
    capabilities = Capabilities(has_exp=False, has_transport=False, retraction_is_second_order=True)

    def __init__(self, r: int, t: int):
        if r < t:
            raise DomainError(f"Stiefel needs r >= t, got r={r}, t={t}")
        self.r, self.t = r, t
        super().__init__((r, t), r * t - t * (t + 1) // 2, r * t - t * (t + 1) // 2)

    def __repr__(self):
        return f"St({self.r},{self.t})"

    def feasibility_residual(self, x):
        return float(np.max(np.abs(x.T @ x - np.eye(self.t))))

    def _project(self, x, w):
        return w - x @ sym(x.T @ w)

    def _retract(self, x, v):
        return polar_factor(x + v)

    def _random_array(self, rng):
        q, _ = qr_thin(rng.standard_normal((self.r, self.t)))
        return q

    def _weingarten(self, x, egrad, u):
        return -u @ sym(x.T @ egrad)


class Grassmann(Manifold):
    """Gr(r, t): t-dimensional subspaces of R^r, as orthonormal r x t representatives."""

    kind = ManifoldKind.GRASSMANN
    capabilities = Capabilities(has_exp=True, has_transport=True, retraction_is_second_order=True)

    def __init__(self, r: int, t: int):
        if not r > t >= 1:
            raise DomainError(f"Grassmann needs r > t >= 1, got r={r}, t={t}")
        self.r, self.t = r, t
        super().__init__((r, t), t * (r - t), t * (r - t))

    def __repr__(self):
        return f"Gr({self.r},{self.t})"

    def feasibility_residual(self, x):
        return float(np.max(np.abs(x.T @ x - np.eye(self.t))))

    def _project(self, x, w):
        return w - x @ (x.T @ w)

    def _exp(self, x, v):
        U, S, V = svd_thin(v)
        return (x @ V * np.cos(S) + U * np.sin(S)) @ V.T

    _retract = _exp

    def _transport(self, x, v, u):
        U, S, V = svd_thin(v)
        Utu = U.T @ u
        return (-(x @ V) * np.sin(S) + U * np.cos(S)) @ Utu + u - U @ Utu

    def _random_array(self, rng):
        q, _ = qr_thin(rng.standard_normal((self.r, self.t)))
        return q

    def _weingarten(self, x, egrad, u):
        return -u @ (x.T @ egrad)


class Product(Manifold):
    """Cartesian product; coordinates are the concatenated flattened factor coordinates."""

    kind = ManifoldKind.PRODUCT

    def __init__(self, factors: Sequence[Manifold]):
        if not factors:
            raise DomainError("Product needs at least one factor")
        self.factors = list(factors)
        self.sizes = [int(np.prod(m.ambient_shape)) for m in self.factors]
        self.offsets = np.cumsum([0] + self.sizes)
        self.capabilities = Capabilities(
            has_exp=all(m.has_exp for m in self.factors),
            has_transport=all(m.has_transport for m in self.factors),
            retraction_is_second_order=all(m.retraction_is_second_order for m in self.factors),
        )
        dim = sum(m.intrinsic_dim for m in self.factors)
        super().__init__((int(self.offsets[-1]),), dim, dim)

    def __repr__(self):
        return 'x'.join(repr(m) for m in self.factors)

    def split(self, w: np.ndarray) -> List[np.ndarray]:
        return [w[self.offsets[i]:self.offsets[i + 1]].reshape(m.ambient_shape)
                for i, m in enumerate(self.factors)]

    def join(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(part, dtype=float).ravel() for part in parts])

    def _blockwise(self, method: str, *arrays: np.ndarray) -> np.ndarray:
        pieces = zip(*(self.split(a) for a in arrays))
        return self.join([getattr(m, method)(*args) for m, args in zip(self.factors, pieces)])

    def feasibility_residual(self, x):
        return max(m.feasibility_residual(part) for m, part in zip(self.factors, self.split(x)))

    def _project(self, x, w):
        return self._blockwise('_project', x, w)

    def _retract(self, x, v):
        return self._blockwise('_retract', x, v)

    def _exp(self, x, v):
        return self._blockwise('_exp', x, v)

    def _transport(self, x, v, u):
        return self._blockwise('_transport', x, v, u)

    def _inverse_transport(self, x, v, w, q):
        return self._blockwise('_inverse_transport', x, v, w, q)

    def _random_array(self, rng):
        return self.join([m._random_array(rng) for m in self.factors])

    def _weingarten(self, x, egrad, u):
        return self._blockwise('_weingarten', x, egrad, u)

    def random_point(self, seed: SeedLike) -> Point:
        seeds = np.atleast_1d(np.asarray(seed, dtype=np.int64)).tolist()
        parts = [m._random_array(make_rng(seeds + [i])) for i, m in enumerate(self.factors)]
        return Point(self, self.join(parts))
