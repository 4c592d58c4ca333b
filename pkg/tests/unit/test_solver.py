"""
Unit tests for the adaptive cubic regularization loop.
"""
import unittest

import numpy as np

from common.errors import ConfigError
from common.metrics import registry
from common.records import GradientVariant, HessianVariant, IterateRecord, RunStatus
from geometry.manifolds import Euclidean
from optimizer.objective import Objective
from optimizer.solver import (
    RunResult, SolverConfig, accept_test, audit_history, initial_alpha, run, update_sigma,
)
from problems.generators import make_top_eigenvalue


EXACT = dict(hessian_variant=HessianVariant.EXACT, gradient_variant=GradientVariant.EXACT)


def quadratic(n: int, seed: int = 0):
    manifold = Euclidean(n)
    M = np.random.default_rng(seed).standard_normal((n, n))
    Q = M.T @ M / n + np.eye(n)
    objective = Objective(
        lambda p: 0.5 * float(p.coords @ Q @ p.coords),
        exact_grad=lambda p: manifold.tangent(p, Q @ p.coords),
        exact_hess=lambda p, u: manifold.tangent(p, Q @ u.coords),
        name='quadratic',
    )
    return manifold, objective


class TestScalarRules(unittest.TestCase):
    """Test cases for alpha selection, acceptance and the sigma update."""

    def test_initial_alpha(self):
        """Test the smallest alpha with 2^(alpha-1) sigma_k >= sigma1."""
        self.assertEqual(initial_alpha(1.0, 1.0), 1)
        self.assertEqual(initial_alpha(4.0, 1.0), 0)
        self.assertEqual(initial_alpha(0.25, 1.0), 3)
        self.assertEqual(initial_alpha(2.0, 1.0), 0)

    def test_update_sigma(self):
        """Test sigma_{k+1} = 2^(alpha-1) sigma_k."""
        self.assertEqual(update_sigma(1.0, 1), 1.0)
        self.assertEqual(update_sigma(2.0, 3), 8.0)
        self.assertEqual(update_sigma(4.0, 0), 2.0)

    def test_accept_test_boundary(self):
        """Test acceptance is inclusive at the threshold."""
        self.assertTrue(accept_test(1.0, 1.0, 1.0, 1, 0.0, 0.0))
        self.assertFalse(accept_test(1.0 + 1e-12, 1.0, 1.0, 1, 0.0, 0.0))

    def test_accept_test_slack(self):
        """Test threshold f_k + sigma/24 |v_prev|^3 - 2^alpha sigma/24 |v|^3 = 1.25."""
        self.assertTrue(accept_test(1.2, 1.0, 1.0, 1, 2.0, 1.0))
        self.assertFalse(accept_test(1.3, 1.0, 1.0, 1, 2.0, 1.0))


class TestSolverConfig(unittest.TestCase):
    """Test cases for SolverConfig validation."""

    def test_defaults_are_valid(self):
        """Test the default configuration."""
        config = SolverConfig()
        self.assertEqual(config.to_dict()['hessian_variant'], 'pullback')

    def test_invalid_fields(self):
        """Test each invalid field is named."""
        with self.assertRaises(ConfigError) as ctx:
            SolverConfig(sigma1=0.0, theta=-1.0)
        self.assertEqual(ctx.exception.fields, ['sigma1', 'theta'])

    def test_second_order_needs_eps_h(self):
        """Test second-order mode without eps_H is rejected."""
        with self.assertRaises(ConfigError) as ctx:
            SolverConfig(second_order_mode=True)
        self.assertEqual(ctx.exception.fields, ['eps_H'])

    def test_negative_seed(self):
        """Test seeds must be nonnegative."""
        with self.assertRaises(ConfigError) as ctx:
            SolverConfig(seed=-1)
        self.assertEqual(ctx.exception.fields, ['seed'])


class TestRun(unittest.TestCase):
    """Test cases for complete solver runs."""

    def test_quadratic_step_decreases(self):
        """Test one exact step on a convex quadratic is accepted and decreases f."""
        manifold, obj = quadratic(4)
        result = run(obj, manifold, SolverConfig(max_outer_iters=1, **EXACT), p0=manifold.point(np.ones(4)))
        self.assertEqual(result.status, RunStatus.MAX_ITERS)
        entry = result.history[0]
        self.assertIsNotNone(entry.f_next)
        self.assertLess(entry.f_next, entry.f_val)

    def test_quadratic_converges(self):
        """Test an exact run reaches the minimizer of a convex quadratic."""
        manifold, obj = quadratic(5, seed=2)
        result = run(obj, manifold, SolverConfig(eps_g=1e-10, **EXACT), p0=manifold.point(np.ones(5)))
        self.assertEqual(result.status, RunStatus.FIRST_ORDER_CONVERGED)
        self.assertLessEqual(np.linalg.norm(result.final_point.coords), 1e-8)
        self.assertEqual(audit_history(result, 1.0), [])

    def test_zero_theta(self):
        """Test theta = 0 accepts the exact subproblem minimizer in both derivative modes."""
        fd = dict(hessian_variant=HessianVariant.PULLBACK, gradient_variant=GradientVariant.FD)
        for seed in range(3):
            for variants in (EXACT, fd):
                problem = make_top_eigenvalue(10, seed)
                config = SolverConfig(theta=0.0, seed=seed, **variants)
                result = run(problem.objective, problem.manifold, config)
                with self.subTest(seed=seed, hessian=config.hessian_variant.value):
                    self.assertEqual(result.status, RunStatus.FIRST_ORDER_CONVERGED)
                    self.assertLessEqual(abs(result.final_f - problem.optimum_oracle()), 1e-6)
                    self.assertEqual(audit_history(result, config.sigma1), [])

    def test_large_tolerance_stops_immediately(self):
        """Test eps_g = 1e3 ends the run at k = 1 without a step."""
        problem = make_top_eigenvalue(6, seed=1)
        result = run(problem.objective, problem.manifold, SolverConfig(eps_g=1e3, seed=1))
        self.assertEqual(result.status, RunStatus.FIRST_ORDER_CONVERGED)
        self.assertEqual(len(result.history), 1)
        self.assertEqual(result.iterations, 1)
        self.assertIsNone(result.history[0].f_next)

    def test_eigenvector_start(self):
        """Test starting at the top eigenvector converges at k = 1."""
        problem = make_top_eigenvalue(2, seed=0, A=np.diag([2.0, 1.0]))
        p0 = problem.manifold.point([1.0, 0.0])
        result = run(problem.objective, problem.manifold, SolverConfig(**EXACT), p0=p0)
        self.assertEqual(result.status, RunStatus.FIRST_ORDER_CONVERGED)
        self.assertEqual(result.iterations, 1)
        self.assertEqual(result.final_f, -1.0)

    def test_alpha_overflow(self):
        """Test an objective with a wrong-signed gradient exhausts alpha."""
        manifold = Euclidean(3)
        obj = Objective(
            lambda p: 0.5 * float(p.coords @ p.coords),
            exact_grad=lambda p: manifold.tangent(p, -p.coords),
            exact_hess=lambda p, u: u,
            name='lying',
        )
        config = SolverConfig(max_alpha=5, **EXACT)
        result = run(obj, manifold, config, p0=manifold.point([10.0, 0.0, 0.0]))
        self.assertEqual(result.status, RunStatus.ALPHA_OVERFLOW)
        self.assertEqual(result.history[-1].alpha_k, 5)
        self.assertIsNone(result.history[-1].f_next)

    def test_stalled_step(self):
        """Test a tiny accepted step ends the run as stalled."""
        manifold = Euclidean(1)
        obj = Objective(
            lambda p: 1e-30 * float(p.coords[0]),
            exact_grad=lambda p: manifold.tangent(p, [1e-30]),
            exact_hess=lambda p, u: manifold.zero_vector(p),
            name='flat',
        )
        result = run(obj, manifold, SolverConfig(eps_g=1e-40, **EXACT), p0=manifold.point([1.0]))
        self.assertEqual(result.status, RunStatus.STALLED_STEP)
        self.assertLess(result.history[-1].v_norm, 1e-14)

    def test_variant_fallback(self):
        """Test requesting exact derivatives of a value-only objective falls back to FD."""
        manifold, obj = quadratic(3)
        value_only = Objective(obj.value, name='value-only')
        with self.assertLogs('FDApprox', level='WARNING'):
            result = run(value_only, manifold, SolverConfig(max_outer_iters=2, **EXACT),
                         p0=manifold.point(np.ones(3)))
        self.assertGreater(result.f_evals, 0)

    def test_deterministic(self):
        """Test identical configurations give identical histories."""
        config = SolverConfig(seed=3, max_outer_iters=20)
        rows = []
        for _ in range(2):
            problem = make_top_eigenvalue(6, seed=3)
            result = run(problem.objective, problem.manifold, config)
            rows.append([r.csv_row() for r in result.history])
        self.assertEqual(rows[0], rows[1])

    def test_trial_metrics(self):
        """Test accepted trials are counted in the metrics registry."""
        labels = {'outcome': 'accepted'}
        before = registry.get_sample_value('rarc_trials_total', labels) or 0.0
        manifold, obj = quadratic(3)
        run(obj, manifold, SolverConfig(max_outer_iters=1, **EXACT), p0=manifold.point(np.ones(3)))
        self.assertEqual(registry.get_sample_value('rarc_trials_total', labels), before + 1)


class TestAuditHistory(unittest.TestCase):
    """Test cases for audit_history."""

    def _record(self, **overrides):
        values = dict(k=1, f_val=1.0, g_norm=1.0, v_norm=1.0, v_prev_norm=0.0, sigma_k=1.0, alpha_k=1,
                      h=1e-3, h_clamped=False, f_evals_cum=10, accepted_trial_count=1, f_next=0.5)
        values.update(overrides)
        return IterateRecord(**values)

    def test_clean_history(self):
        """Test a consistent accepted step passes."""
        result = RunResult(status=RunStatus.MAX_ITERS, final_point=None,
                           history=[self._record(f_next=0.9)], v0_norm=0.0)
        self.assertEqual(audit_history(result, 1.0), [])

    def test_violations(self):
        """Test small sigma and a failed acceptance inequality are reported."""
        history = [self._record(sigma_k=0.5, f_next=2.0)]
        result = RunResult(status=RunStatus.MAX_ITERS, final_point=None, history=history, v0_norm=0.0)
        violations = audit_history(result, 1.0)
        self.assertTrue(any('sigma_k' in v for v in violations))
        self.assertTrue(any('acceptance' in v for v in violations))


if __name__ == '__main__':
    unittest.main()
