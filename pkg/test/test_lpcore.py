"""
Unit Tests for LP Core Module
Tests solving, dual extraction and duality checks
"""

import unittest
import sys
import os

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src import lpcore
from src.exceptions import DimensionMismatchError, DomainError, MalformedProgramError
from test.test_utils import TestEnvironment


def small_max_lp():
    """max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 (optimum 2.8 at (1.6, 1.2))"""
    return lpcore.LinearProgram(
        'max', [1.0, 1.0], [[1.0, 2.0], [3.0, 1.0]], ['<=', '<='], [4.0, 6.0],
        [0.0, 0.0], [np.inf, np.inf], var_names=['x', 'y'], row_names=['a', 'b']
    )


def small_min_lp():
    """min 2x + 3y s.t. x + y >= 1, x - y = 0, x, y free (optimum 2.5)"""
    return lpcore.LinearProgram(
        'min', [2.0, 3.0], [[1.0, 1.0], [1.0, -1.0]], ['>=', '='], [1.0, 0.0],
        [-np.inf, -np.inf], [np.inf, np.inf]
    )


class TestLinearProgram(unittest.TestCase):
    """Test program validation"""

    def test_shapes(self):
        lp = small_max_lp()
        self.assertEqual(lp.num_vars, 2)
        self.assertEqual(lp.num_rows, 2)

    def test_bad_sense(self):
        with self.assertRaises(MalformedProgramError):
            lpcore.LinearProgram('maximize', [1.0], [[1.0]], ['<='], [1.0], [0.0], [1.0])

    def test_bad_row_sense(self):
        with self.assertRaises(MalformedProgramError):
            lpcore.LinearProgram('max', [1.0], [[1.0]], ['<'], [1.0], [0.0], [1.0])

    def test_shape_mismatch(self):
        with self.assertRaises(MalformedProgramError):
            lpcore.LinearProgram('max', [1.0, 2.0], [[1.0]], ['<='], [1.0], [0.0, 0.0], [1.0, 1.0])

    def test_non_finite_coefficient(self):
        with self.assertRaises(MalformedProgramError):
            lpcore.LinearProgram('max', [np.nan], [[1.0]], ['<='], [1.0], [0.0], [1.0])

    def test_crossed_bounds(self):
        with self.assertRaises(MalformedProgramError):
            lpcore.LinearProgram('max', [1.0], [[1.0]], ['<='], [1.0], [2.0], [1.0])

    def test_scaled_objective(self):
        lp = small_max_lp().scaled_objective(2.0)
        np.testing.assert_allclose(lp.c, [2.0, 2.0])


class TestSolve(unittest.TestCase):
    """Test HiGHS solves and dual signs"""

    def test_max_problem(self):
        sol = lpcore.solve(small_max_lp())
        self.assertTrue(sol.optimal)
        self.assertAlmostEqual(sol.objective, 2.8, places=7)
        np.testing.assert_allclose(sol.x, [1.6, 1.2], atol=1e-7)
        # both rows bind; shadow prices 0.4 and 0.2
        np.testing.assert_allclose(sol.duals, [0.4, 0.2], atol=1e-7)
        self.assertAlmostEqual(sol.dual_objective, 2.8, places=7)
        self.assertLess(sol.gap, 1e-7)

    def test_min_problem(self):
        sol = lpcore.solve(small_min_lp())
        self.assertTrue(sol.optimal)
        self.assertAlmostEqual(sol.objective, 2.5, places=7)
        np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-7)
        self.assertGreaterEqual(sol.duals[0], -1e-9)
        self.assertAlmostEqual(sol.dual_objective, 2.5, places=7)

    def test_infeasible(self):
        lp = lpcore.LinearProgram('max', [1.0], [[1.0], [1.0]], ['<=', '>='], [1.0, 2.0],
                                  [0.0], [np.inf])
        sol = lpcore.solve(lp)
        self.assertEqual(sol.status, lpcore.STATUS_INFEASIBLE)
        self.assertFalse(sol.optimal)
        self.assertEqual(sol.gap, float('inf'))

    def test_unbounded(self):
        lp = lpcore.LinearProgram('max', [1.0], [[-1.0]], ['<='], [1.0], [0.0], [np.inf])
        sol = lpcore.solve(lp)
        self.assertFalse(sol.optimal)
        self.assertIsNone(sol.x)

    def test_tolerance_domain(self):
        with self.assertRaises(DomainError):
            lpcore.solve(small_max_lp(), tol=1e-2)
        with self.assertRaises(DomainError):
            lpcore.solve(small_max_lp(), tol=1e-14)

    def test_residuals_within_tolerance(self):
        sol = lpcore.solve(small_max_lp(), tol=1e-9)
        self.assertLessEqual(sol.primal_infeasibility, 1e-9 * 3.8)
        self.assertLessEqual(sol.dual_infeasibility, 1e-9 * 3.8)

    def test_gap_lp_example(self):
        """max alpha s.t. a0 + a1 = 1, 2 alpha + a0 - a1 <= 1, a >= 0"""
        lp = lpcore.LinearProgram(
            'max', [1.0, 0.0, 0.0], [[0.0, 1.0, 1.0], [2.0, 1.0, -1.0]], ['=', '<='], [1.0, 1.0],
            [-np.inf, 0.0, 0.0], [np.inf, np.inf, np.inf]
        )
        sol = lpcore.solve(lp)
        self.assertTrue(sol.optimal)
        np.testing.assert_allclose(sol.x, [1.0, 0.0, 1.0], atol=1e-8)
        self.assertAlmostEqual(sol.dual_objective, 1.0, places=8)

    def test_objective_scaling(self):
        """Scaling c scales the optimum and the duals and keeps x"""
        base = lpcore.solve(small_max_lp())
        scaled = lpcore.solve(small_max_lp().scaled_objective(3.0))
        self.assertAlmostEqual(scaled.objective, 3.0 * base.objective, places=7)
        np.testing.assert_allclose(scaled.x, base.x, atol=1e-7)
        np.testing.assert_allclose(scaled.duals, 3.0 * base.duals, atol=1e-7)

    def test_random_programs(self):
        """Seeded 10 x 10 packing LPs: HiGHS duals certify the optimum"""
        rng = np.random.default_rng(20240611)
        for trial in range(10):
            A = rng.uniform(0.1, 1.0, size=(10, 10))
            b = rng.uniform(1.0, 2.0, size=10)
            c = rng.uniform(0.0, 1.0, size=10)
            lp = lpcore.LinearProgram('max', c, A, ['<='] * 10, b, np.zeros(10), np.full(10, np.inf))
            sol = lpcore.solve(lp, tol=1e-9)
            self.assertTrue(sol.optimal, f"trial {trial}")
            check = lpcore.weak_duality_check(lp, sol.x, sol.duals, tol=1e-8)
            self.assertTrue(check.ok, check.problems)
            self.assertLessEqual(check.gap, 1e-7 * (1.0 + abs(sol.objective)))
            self.assertTrue(np.all(sol.duals >= -1e-9))
            self.assertAlmostEqual(float(b @ sol.duals), sol.objective, places=6)


class TestDualityCheck(unittest.TestCase):
    """Test weak_duality_check and dual_residuals"""

    def test_optimal_pair(self):
        check = lpcore.weak_duality_check(small_max_lp(), [1.6, 1.2], [0.4, 0.2])
        self.assertTrue(check.ok, check.problems)
        self.assertAlmostEqual(check.gap, 0.0, places=12)

    def test_suboptimal_pair_has_positive_gap(self):
        check = lpcore.weak_duality_check(small_max_lp(), [1.0, 1.0], [1.0, 0.0])
        self.assertTrue(check.ok, check.problems)
        self.assertAlmostEqual(check.gap, 2.0, places=12)

    def test_infeasible_primal(self):
        check = lpcore.weak_duality_check(small_max_lp(), [4.0, 4.0], [0.4, 0.2])
        self.assertFalse(check.ok)
        self.assertTrue(any('primal infeasibility' in p for p in check.problems))

    def test_wrong_dual_sign(self):
        check = lpcore.weak_duality_check(small_max_lp(), [1.6, 1.2], [-0.4, 0.2])
        self.assertFalse(check.ok)
        self.assertTrue(any('wrong sign' in p for p in check.problems))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            lpcore.weak_duality_check(small_max_lp(), [1.0], [0.4, 0.2])
        with self.assertRaises(DimensionMismatchError):
            lpcore.weak_duality_check(small_max_lp(), [1.0, 1.0], [0.4])

    def test_dual_residuals_absorb_bounds(self):
        # y = 0: c = (1, 1) must go to upper-bound multipliers, none exist
        obj, infeas, problems = lpcore.dual_residuals(small_max_lp(), [0.0, 0.0])
        self.assertEqual(problems, [])
        self.assertAlmostEqual(infeas, 1.0)
        # y large: c - A^T y negative, absorbed by the lower bounds at 0
        obj, infeas, _ = lpcore.dual_residuals(small_max_lp(), [1.0, 1.0])
        self.assertAlmostEqual(infeas, 0.0)
        self.assertAlmostEqual(obj, 10.0)

    def test_primal_infeasibility_bounds(self):
        self.assertAlmostEqual(lpcore.primal_infeasibility(small_max_lp(), [-0.5, 0.0]), 0.5)


class TestLPFile(unittest.TestCase):
    """Test the CPLEX LP dump"""

    def setUp(self):
        self.env = TestEnvironment()
        self.env.setup()

    def tearDown(self):
        self.env.teardown()

    def test_write_lp_file(self):
        path = self.env.path('small.lp')
        lpcore.write_lp_file(small_max_lp(), path)
        with open(path, encoding='utf-8') as f:
            text = f.read()
        self.assertIn('Maximize', text)
        self.assertIn(' a: ', text)
        self.assertIn('Subject To', text)
        self.assertTrue(text.rstrip().endswith('End'))

    def test_free_variables(self):
        path = self.env.path('free.lp')
        lpcore.write_lp_file(small_min_lp(), path)
        with open(path, encoding='utf-8') as f:
            text = f.read()
        self.assertIn('Minimize', text)
        self.assertIn('x0 free', text)


if __name__ == '__main__':
    unittest.main()
