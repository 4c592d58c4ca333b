"""
Seeded benchmark problems.

    top-eig             max 1/2 x^T A x            on Sp(r)
    dominant-subspace   max 1/2 Tr(X^T A X)        on Gr(r, t)
    elliptope           min 1/2 Tr(X^T A X)        on Ob(r, t)
    truncated-svd       max Tr(U^T A V N)          on St(r, t) x St(s, t), N = diag(t, ..., 1)
    swish               min |f3(f2(f1(x)))| / r4   on Sp(r1), f_i(x) = swish(A_i x + b_i)

Maximization problems are solved as minimization of the negated cost; ``maximized``
records the sign flip.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from common.constants import PROBLEM_SEED_WORD
from common.errors import DomainError
from common.utils import make_rng, setup_logger
from geometry.manifolds import Grassmann, Manifold, Oblique, Point, Product, Sphere, Stiefel, TangentVector
from geometry.numkernel import svd_thin, sym_eig
from optimizer.objective import Objective


logger = setup_logger('Problems')


@dataclass
class ProblemInstance:
    name: str
    manifold: Manifold
    objective: Objective
    optimum_oracle: Optional[Callable[[], float]]
    seed: int
    maximized: bool = False

    @property
    def label(self) -> str:
        return repr(self.manifold)


def _problem_rng(seed: int) -> np.random.Generator:
    return make_rng((seed, PROBLEM_SEED_WORD))


def _symmetric_gaussian(rng: np.random.Generator, r: int) -> np.ndarray:
    M = rng.standard_normal((r, r))
    return 0.5 * (M + M.T)


def _quadratic_objective(manifold: Manifold, A: np.ndarray, scale: float, name: str) -> Objective:
    """f(X) = scale * Tr(X^T A X) for symmetric A, with exact derivatives."""

    def f(p: Point) -> float:
        X = p.coords
        return scale * float(np.sum(X * (A @ X)))

    def grad(p: Point) -> TangentVector:
        return manifold.egrad_to_rgrad(p, 2.0 * scale * (A @ p.coords))

    def hess(p: Point, u: TangentVector) -> TangentVector:
        return manifold.ehess_to_rhess(p, 2.0 * scale * (A @ p.coords), 2.0 * scale * (A @ u.coords), u)

    return Objective(f, grad, hess, name=name)


def make_top_eigenvalue(r: int, seed: int, A: Optional[np.ndarray] = None) -> ProblemInstance:
    if r < 2:
        raise DomainError(f"top-eig needs r >= 2, got {r}")
    if A is None:
        A = _symmetric_gaussian(_problem_rng(seed), r)
    manifold = Sphere(r)
    return ProblemInstance(
        name='top-eig',
        manifold=manifold,
        objective=_quadratic_objective(manifold, A, -0.5, 'top-eig'),
        optimum_oracle=lambda: -0.5 * sym_eig(A).eigenvalues[-1],
        seed=seed,
        maximized=True,
    )


def make_dominant_subspace(r: int, t: int, seed: int, A: Optional[np.ndarray] = None) -> ProblemInstance:
    if not r > t >= 1:
        raise DomainError(f"dominant-subspace needs r > t >= 1, got r={r}, t={t}")
    if A is None:
        A = _symmetric_gaussian(_problem_rng(seed), r)
    manifold = Grassmann(r, t)
    return ProblemInstance(
        name='dominant-subspace',
        manifold=manifold,
        objective=_quadratic_objective(manifold, A, -0.5, 'dominant-subspace'),
        optimum_oracle=lambda: -0.5 * float(np.sum(sym_eig(A).eigenvalues[-t:])),
        seed=seed,
        maximized=True,
    )


def make_elliptope(r: int, t: int, seed: int, A: Optional[np.ndarray] = None) -> ProblemInstance:
    if r < 2 or t < 2:
        raise DomainError(f"elliptope needs r >= 2 and t >= 2, got r={r}, t={t}")
    if A is None:
        A = _symmetric_gaussian(_problem_rng(seed), r)
    manifold = Oblique(r, t)
    return ProblemInstance(
        name='elliptope',
        manifold=manifold,
        objective=_quadratic_objective(manifold, A, 0.5, 'elliptope'),
        optimum_oracle=None,
        seed=seed,
    )


def make_truncated_svd(r: int, s: int, t: int, seed: int, A: Optional[np.ndarray] = None) -> ProblemInstance:
    if not (r >= t >= 1 and s >= t):
        raise DomainError(f"truncated-svd needs r, s >= t >= 1, got r={r}, s={s}, t={t}")
    if A is None:
        A = _problem_rng(seed).standard_normal((r, s))
    weights = np.arange(t, 0, -1, dtype=float)
    manifold = Product([Stiefel(r, t), Stiefel(s, t)])

    def f(p: Point) -> float:
        U, V = manifold.split(p.coords)
        return -float(np.sum((U.T @ A @ V).diagonal() * weights))

    def egrad(p: Point) -> np.ndarray:
        U, V = manifold.split(p.coords)
        return manifold.join([-(A @ V) * weights, -(A.T @ U) * weights])

    def grad(p: Point) -> TangentVector:
        return manifold.egrad_to_rgrad(p, egrad(p))

    def hess(p: Point, u: TangentVector) -> TangentVector:
        dU, dV = manifold.split(u.coords)
        ehess = manifold.join([-(A @ dV) * weights, -(A.T @ dU) * weights])
        return manifold.ehess_to_rhess(p, egrad(p), ehess, u)

    def oracle() -> float:
        _, singular_values, _ = svd_thin(A)
        return -float(np.sum(weights * singular_values[:t]))

    return ProblemInstance(
        name='truncated-svd',
        manifold=manifold,
        objective=Objective(f, grad, hess, name='truncated-svd'),
        optimum_oracle=oracle,
        seed=seed,
        maximized=True,
    )


def swish(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def make_swish_composite(dims: Sequence[int], seed: int,
                         layers: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None) -> ProblemInstance:
    """Three swish layers R^r1 -> R^r2 -> R^r3 -> R^r4 composed with the 2-norm; value only."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or min(dims) < 1:
        raise DomainError(f"swish needs four positive dimensions, got {dims}")
    if dims[0] < 2:
        raise DomainError(f"swish needs r1 >= 2 for a nontrivial sphere, got {dims[0]}")
    if layers is None:
        rng = _problem_rng(seed)
        layers = [(rng.standard_normal((dims[i + 1], dims[i])), rng.standard_normal(dims[i + 1]))
                  for i in range(3)]
    r4 = dims[3]

    def f(p: Point) -> float:
        y = p.coords
        for weight, bias in layers:
            y = swish(weight @ y + bias)
        return float(np.linalg.norm(y)) / r4

    return ProblemInstance(
        name='swish',
        manifold=Sphere(dims[0]),
        objective=Objective(f, name='swish'),
        optimum_oracle=None,
        seed=seed,
    )


# Desk-scale sizes of the benchmark suite, in report order.
SUITE: List[Tuple[str, Dict]] = [
    ('top-eig', {'n': 20}),
    ('dominant-subspace', {'r': 12, 't': 4}),
    ('elliptope', {'r': 12, 't': 4}),
    ('truncated-svd', {'r': 8, 's': 6, 't': 3}),
    ('swish', {'dims': (10, 20, 18, 16)}),
]

PROBLEM_NAMES = [name for name, _ in SUITE]


def make_problem(name: str, seed: int, **sizes) -> ProblemInstance:
    """Build a problem by CLI name; missing sizes take the suite defaults."""
    defaults = dict(SUITE)
    if name not in defaults:
        raise DomainError(f"Unknown problem: {name}")
    given = {k: v for k, v in sizes.items() if v is not None}
    if name == 'top-eig' and 'n' not in given and 'r' in given:
        given['n'] = given.pop('r')
    unused = sorted(set(given) - set(defaults[name]))
    if unused:
        logger.warning(f"{name} ignores size(s): {', '.join(unused)}")
    params = {**defaults[name], **given}
    logger.debug(f"Building {name} with {params}, seed={seed}")

    if name == 'top-eig':
        return make_top_eigenvalue(params['n'], seed)
    if name == 'dominant-subspace':
        return make_dominant_subspace(params['r'], params['t'], seed)
    if name == 'elliptope':
        return make_elliptope(params['r'], params['t'], seed)
    if name == 'truncated-svd':
        return make_truncated_svd(params['r'], params['s'], params['t'], seed)
    return make_swish_composite(params['dims'], seed)
