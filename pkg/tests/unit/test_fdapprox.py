"""
Unit tests for the finite-difference surrogates.
"""
import unittest

import numpy as np

from common.constants import H_CEIL, H_FLOOR
from common.errors import CapabilityError, DomainError, EvaluationError
from common.records import GradientVariant, HessianVariant
from common.utils import make_rng
from geometry.manifolds import Euclidean, Sphere, Stiefel
from optimizer.fdapprox import (
    build_trial, exact_hessian_matrix, fd_gradient, fd_hessian_gradcalls, fd_hessian_pullback,
    fd_hessian_transport, fd_step, resolve_variants,
)
from optimizer.objective import Objective
from problems.generators import make_swish_composite, make_top_eigenvalue, make_truncated_svd


def slope(hs, errors):
    return np.polyfit(np.log(hs), np.log(errors), 1)[0]


def euclidean_quadratic(Q):
    manifold = Euclidean(Q.shape[0])
    objective = Objective(
        lambda p: 0.5 * float(p.coords @ Q @ p.coords),
        exact_grad=lambda p: manifold.egrad_to_rgrad(p, Q @ p.coords),
        exact_hess=lambda p, u: manifold.tangent(p, Q @ u.coords),
        name='quadratic',
    )
    return manifold, objective


class TestFDStep(unittest.TestCase):
    """Test cases for fd_step."""

    def test_formula(self):
        """Test h = |v| / (2^(alpha-1) sigma)."""
        self.assertEqual(fd_step(1.0, 1.0, 1), (1.0, False))
        self.assertEqual(fd_step(1.0, 1.0, 0), (2.0, False))

    def test_floor(self):
        """Test tiny steps are clamped to the floor."""
        self.assertEqual(fd_step(1e-12, 1.0, 1), (H_FLOOR, True))

    def test_ceiling(self):
        """Test huge steps are clamped to the ceiling."""
        self.assertEqual(fd_step(1e6, 1.0, 1), (H_CEIL, True))

    def test_unclamped_is_exact(self):
        """Test unclamped steps equal the formula bit for bit."""
        for v_prev, sigma, alpha in [(0.3, 1.5, 2), (7.1, 0.25, 0), (1e-3, 4.0, 5)]:
            h, clamped = fd_step(v_prev, sigma, alpha)
            self.assertFalse(clamped)
            self.assertEqual(h, v_prev / (2.0 ** (alpha - 1) * sigma))

    def test_non_positive_sigma(self):
        """Test sigma <= 0 is rejected."""
        with self.assertRaises(DomainError):
            fd_step(1.0, 0.0, 1)


class TestFDGradient(unittest.TestCase):
    """Test cases for fd_gradient."""

    def test_constant_objective(self):
        """Test the gradient of a constant is zero."""
        sphere = Sphere(4)
        p = sphere.random_point(1)
        g = fd_gradient(Objective(lambda p: 3.0), p, sphere.tangent_basis(p), 1e-3)
        np.testing.assert_array_equal(g, np.zeros(3))

    def test_eigenvector_is_stationary(self):
        """Test FD gradient vanishes at an eigenvector."""
        problem = make_top_eigenvalue(3, seed=0, A=np.diag([3.0, 1.0, 1.0]))
        p = problem.manifold.point([1.0, 0.0, 0.0])
        g = fd_gradient(problem.objective, p, problem.manifold.tangent_basis(p), 1e-4)
        self.assertLessEqual(np.linalg.norm(g), 1e-8)

    def test_second_order_accuracy(self):
        """Test FD gradient error decays with slope 2."""
        problem = make_top_eigenvalue(10, seed=3)
        manifold, obj = problem.manifold, problem.objective
        p = manifold.random_point(4)
        basis = manifold.tangent_basis(p)
        exact = basis.coordinates(obj.gradient(p))

        hs = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        errors = [np.linalg.norm(fd_gradient(obj, p, basis, h) - exact) for h in hs]
        self.assertTrue(1.8 <= slope(hs, errors) <= 2.2)

    def test_evaluation_count(self):
        """Test the gradient uses exactly 2n evaluations."""
        problem = make_top_eigenvalue(6, seed=1)
        p = problem.manifold.random_point(2)
        basis = problem.manifold.tangent_basis(p)
        problem.objective.reset_counters()
        fd_gradient(problem.objective, p, basis, 1e-3)
        self.assertEqual(problem.objective.eval_counter, 10)

    def test_non_finite_value(self):
        """Test NaN objective values raise with the offending point."""
        sphere = Sphere(3)
        p = sphere.random_point(1)
        with self.assertRaises(EvaluationError) as ctx:
            fd_gradient(Objective(lambda q: float('nan')), p, sphere.tangent_basis(p), 1e-3)
        self.assertIsNotNone(ctx.exception.point)


class TestFDHessians(unittest.TestCase):
    """Test cases for the three Hessian approximations."""

    def setUp(self):
        """Set up test environment."""
        self.problem = make_top_eigenvalue(10, seed=5)
        self.manifold = self.problem.manifold
        self.obj = self.problem.objective
        self.p = self.manifold.random_point(6)
        self.basis = self.manifold.tangent_basis(self.p)
        self.f0 = self.obj.value(self.p)
        self.exact = exact_hessian_matrix(self.obj, self.p, self.basis)

    def _errors(self, approximation, hs):
        return [np.linalg.norm(approximation(h) - self.exact, 2) for h in hs]

    def test_pullback_first_order(self):
        """Test pullback Hessian error decays with slope 1."""
        hs = np.array([3e-2, 1e-2, 3e-3, 1e-3, 3e-4])
        errors = self._errors(lambda h: fd_hessian_pullback(self.obj, self.p, self.basis, h, f0=self.f0), hs)
        self.assertTrue(0.8 <= slope(hs, errors) <= 1.2)

    def test_transport_first_order(self):
        """Test transport Hessian error decays with slope 1."""
        hs = np.array([3e-2, 1e-2, 3e-3, 1e-3, 3e-4])
        errors = self._errors(lambda h: fd_hessian_transport(self.obj, self.p, self.basis, h, f0=self.f0), hs)
        self.assertTrue(0.8 <= slope(hs, errors) <= 1.2)

    def test_gradcalls_first_order(self):
        """Test gradient-call Hessian error decays with slope 1."""
        hs = np.array([3e-2, 1e-2, 3e-3, 1e-3, 3e-4])
        errors = self._errors(lambda h: fd_hessian_gradcalls(self.obj, self.p, self.basis, h), hs)
        self.assertTrue(0.8 <= slope(hs, errors) <= 1.2)

    def test_transport_agrees_with_pullback(self):
        """Test the two evaluation-only variants agree to O(h)."""
        h = 1e-3
        pullback = fd_hessian_pullback(self.obj, self.p, self.basis, h, f0=self.f0)
        transport = fd_hessian_transport(self.obj, self.p, self.basis, h, f0=self.f0)
        A_norm = np.linalg.norm(self.exact, 2) + 1.0
        self.assertLessEqual(np.linalg.norm(pullback - transport, 2), 20 * h * A_norm)

    def test_exact_symmetry(self):
        """Test every variant returns an exactly symmetric matrix."""
        h = 1e-3
        for B in [fd_hessian_pullback(self.obj, self.p, self.basis, h, f0=self.f0),
                  fd_hessian_transport(self.obj, self.p, self.basis, h, f0=self.f0),
                  fd_hessian_gradcalls(self.obj, self.p, self.basis, h)]:
            np.testing.assert_array_equal(B, B.T)

    def test_evaluation_counts(self):
        """Test evaluation accounting of each variant."""
        n = self.basis.dim
        self.obj.reset_counters()
        fd_hessian_pullback(self.obj, self.p, self.basis, 1e-3, f0=self.f0)
        self.assertEqual(self.obj.eval_counter, n * (n - 1) // 2 + 2 * n)

        self.obj.reset_counters()
        fd_hessian_transport(self.obj, self.p, self.basis, 1e-3, f0=self.f0)
        self.assertEqual(self.obj.eval_counter, n * n + n)

        self.obj.reset_counters()
        fd_hessian_gradcalls(self.obj, self.p, self.basis, 1e-3)
        self.assertEqual(self.obj.counts().grad_calls, n + 1)
        self.assertEqual(self.obj.eval_counter, 0)

    def test_constant_objective(self):
        """Test constant objectives give zero Hessians."""
        obj = Objective(lambda p: 2.5)
        for B in [fd_hessian_pullback(obj, self.p, self.basis, 1e-2),
                  fd_hessian_transport(obj, self.p, self.basis, 1e-2)]:
            np.testing.assert_array_equal(B, np.zeros((9, 9)))


class TestEuclideanQuadratics(unittest.TestCase):
    """Test exactness of the difference formulas on quadratics."""

    def setUp(self):
        """Set up test environment."""
        M = make_rng(9).standard_normal((4, 4))
        self.Q = 0.5 * (M + M.T)
        self.manifold, self.obj = euclidean_quadratic(self.Q)
        self.p = self.manifold.random_point(10)
        self.basis = self.manifold.tangent_basis(self.p)

    def test_pullback_recovers_quadratic(self):
        """Test second differences reproduce Q."""
        np.testing.assert_allclose(fd_hessian_pullback(self.obj, self.p, self.basis, 0.5), self.Q, atol=1e-12)

    def test_gradcalls_recovers_quadratic(self):
        """Test forward differences of a linear gradient reproduce Q."""
        np.testing.assert_allclose(fd_hessian_gradcalls(self.obj, self.p, self.basis, 0.5), self.Q, atol=1e-12)

    def test_gradcalls_linear_objective(self):
        """Test a constant gradient gives a zero Hessian."""
        c = np.array([1.0, -2.0, 0.5, 3.0])
        obj = Objective(lambda p: float(c @ p.coords), exact_grad=lambda p: self.manifold.tangent(p, c))
        np.testing.assert_array_equal(fd_hessian_gradcalls(obj, self.p, self.basis, 0.5), np.zeros((4, 4)))


class TestCapabilities(unittest.TestCase):
    """Test capability checks and variant resolution."""

    def test_transport_requires_exp(self):
        """Test the transport variant is unavailable on Stiefel."""
        manifold = Stiefel(4, 2)
        p = manifold.random_point(1)
        with self.assertRaises(CapabilityError):
            fd_hessian_transport(Objective(lambda q: 0.0), p, manifold.tangent_basis(p), 1e-3)

    def test_gradcalls_requires_gradient(self):
        """Test the gradient-call variant needs an exact gradient."""
        sphere = Sphere(3)
        p = sphere.random_point(1)
        with self.assertRaises(CapabilityError):
            fd_hessian_gradcalls(Objective(lambda q: 0.0), p, sphere.tangent_basis(p), 1e-3)

    def test_gradcalls_projection_on_stiefel(self):
        """Test projected gradient differences approach the Hessian on a Stiefel product."""
        problem = make_truncated_svd(5, 4, 2, seed=2)
        manifold, obj = problem.manifold, problem.objective
        p = manifold.random_point(3)
        basis = manifold.tangent_basis(p)
        exact = exact_hessian_matrix(obj, p, basis)
        coarse = np.linalg.norm(fd_hessian_gradcalls(obj, p, basis, 1e-2) - exact, 2)
        fine = np.linalg.norm(fd_hessian_gradcalls(obj, p, basis, 1e-4) - exact, 2)
        self.assertLess(fine, coarse / 10)

    def test_variant_fallback(self):
        """Test derivative-free problems fall back to FD pullback with a warning."""
        problem = make_swish_composite((4, 5, 5, 3), seed=1)
        with self.assertLogs('FDApprox', level='WARNING'):
            resolved = resolve_variants(problem.objective, problem.manifold,
                                        HessianVariant.EXACT, GradientVariant.EXACT)
        self.assertEqual(resolved, (HessianVariant.PULLBACK, GradientVariant.FD))

    def test_transport_fallback_on_stiefel(self):
        """Test the transport variant falls back on Stiefel products."""
        problem = make_truncated_svd(5, 4, 2, seed=2)
        with self.assertLogs('FDApprox', level='WARNING'):
            resolved = resolve_variants(problem.objective, problem.manifold,
                                        HessianVariant.TRANSPORT, GradientVariant.FD)
        self.assertEqual(resolved[0], HessianVariant.PULLBACK)

    def test_supported_variant_kept(self):
        """Test supported variants are returned unchanged."""
        problem = make_top_eigenvalue(5, seed=1)
        resolved = resolve_variants(problem.objective, problem.manifold,
                                    HessianVariant.TRANSPORT, GradientVariant.EXACT)
        self.assertEqual(resolved, (HessianVariant.TRANSPORT, GradientVariant.EXACT))


class TestBuildTrial(unittest.TestCase):
    """Test cases for build_trial."""

    def test_pullback_trial(self):
        """Test a derivative-free trial reports its step and evaluation count."""
        problem = make_top_eigenvalue(6, seed=4)
        manifold, obj = problem.manifold, problem.objective
        p = manifold.random_point(5)
        basis = manifold.tangent_basis(p)
        trial = build_trial(obj, p, basis, 0.5, 1.0, 1, HessianVariant.PULLBACK, GradientVariant.FD,
                            f0=obj.value(p))
        n = basis.dim
        self.assertEqual(trial.h, 0.5)
        self.assertFalse(trial.h_was_clamped)
        self.assertEqual(trial.f_evals_used, 2 * n + n * (n - 1) // 2 + 2 * n)
        self.assertEqual(trial.grad_evals_used, 0)

    def test_exact_trial(self):
        """Test exact mode uses the analytic gradient and Hessian."""
        problem = make_top_eigenvalue(6, seed=4)
        manifold, obj = problem.manifold, problem.objective
        p = manifold.random_point(5)
        basis = manifold.tangent_basis(p)
        trial = build_trial(obj, p, basis, 1e-12, 1.0, 1, HessianVariant.EXACT, GradientVariant.EXACT,
                            f0=obj.value(p))
        self.assertTrue(trial.h_was_clamped)
        self.assertEqual(trial.f_evals_used, 0)
        np.testing.assert_allclose(trial.g, basis.coordinates(obj.gradient(p)))
        np.testing.assert_array_equal(trial.B, trial.B.T)


if __name__ == '__main__':
    unittest.main()
