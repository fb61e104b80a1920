"""
Unit Tests for Kernels Module
Tests invariant kernels, the Grothendieck constant, Reynolds transforms and
the windmill mixture
"""

import unittest
import sys
import os
import math

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.cutpoly import membership_lp
from src.exceptions import (
    DimensionMismatchError, DomainError, InvalidKernelError, SampleCountError
)
from src.kernels import (
    ConstantSign, HalfspaceSign, InvariantKernel, WindmillSign, alpha_gw, avidor_zwick_mix,
    best_single_degree, gw_improvement_test, gw_kernel, gw_schoenberg, is_positive_on_points,
    min_ratio, reynolds_estimate, reynolds_exact_circle, sample_kernel_matrix, windmill_kernel,
    windmill_reynolds
)
from src.streams import substream
from test.test_utils import ALPHA_2, ALPHA_GW, T_GW, TestEnvironment, slow_test


class TestInvariantKernel(unittest.TestCase):
    """Test InvariantKernel"""

    def test_value_at_one(self):
        kernel = InvariantKernel(4, [0.2, 0.3, 0.5])
        self.assertAlmostEqual(kernel(1.0), 1.0)

    def test_clips_tiny_negatives(self):
        kernel = InvariantKernel(3, [0.5, -1e-9, 0.5])
        self.assertEqual(kernel.coefficients[1], 0.0)
        self.assertAlmostEqual(kernel.coefficients.sum(), 1.0)

    def test_rejects_negative(self):
        with self.assertRaises(InvalidKernelError):
            InvariantKernel(3, [1.1, -0.1])

    def test_rejects_bad_sum(self):
        with self.assertRaises(InvalidKernelError):
            InvariantKernel(3, [0.5, 0.2])

    def test_matrix_evaluation(self):
        kernel = InvariantKernel.single_degree(3, 2)
        G = np.array([[1.0, 0.5], [0.5, 1.0]])
        np.testing.assert_allclose(kernel(G), [[1.0, -0.125], [-0.125, 1.0]])

    def test_derivative(self):
        kernel = InvariantKernel(5, [0.1, 0.4, 0.2, 0.3])
        h = 1e-6
        fd = (kernel(0.3 + h) - kernel(0.3 - h)) / (2 * h)
        self.assertAlmostEqual(kernel.derivative(0.3), fd, places=6)

    def test_file_round_trip(self):
        env = TestEnvironment()
        try:
            kernel = InvariantKernel(6, [0.25, 0.0, 0.75])
            path = env.path('kernel.json')
            kernel.save(path)
            loaded = InvariantKernel.load(path)
            np.testing.assert_array_equal(loaded.coefficients, kernel.coefficients)
            self.assertEqual(loaded.n, 6)
        finally:
            env.teardown()

    def test_head_keeps_low_degrees(self):
        kernel = InvariantKernel(4, [0.1, 0.3, 0.0, 0.6])
        head = kernel.head(1)
        self.assertEqual(head.degree, 1)
        self.assertAlmostEqual(head(0.25), 0.1 + 0.3 * 0.25)
        self.assertAlmostEqual(kernel.head(10)(0.25), kernel(0.25))

    def test_degree_mismatch(self):
        with self.assertRaises(InvalidKernelError):
            InvariantKernel.from_dict({'n': 3, 'degree': 4, 'coefficients': ['1.0']})


class TestGrothendieck(unittest.TestCase):
    """Test alpha_gw and the Grothendieck kernel"""

    def test_alpha_gw(self):
        gw = alpha_gw()
        self.assertAlmostEqual(gw.value, ALPHA_GW, delta=1e-5)
        self.assertAlmostEqual(gw.minimizer, T_GW, delta=1e-3)

    def test_kernel_values(self):
        self.assertEqual(gw_kernel(1.0), 1.0)
        self.assertEqual(gw_kernel(0.0), 0.0)
        self.assertAlmostEqual(gw_kernel(-1.0), -1.0)

    def test_out_of_domain(self):
        with self.assertRaises(DomainError):
            gw_kernel(1.5)

    def test_schoenberg_expansion(self):
        kernel = gw_schoenberg(4, 60)
        ts = np.linspace(-0.9, 0.9, 19)
        np.testing.assert_allclose(kernel(ts), gw_kernel(ts), atol=0.02)
        self.assertTrue(np.all(kernel.coefficients[0::2] < 1e-10))

    def test_kernel_matrices_in_cut_polytope(self):
        """Finite restrictions of K_GW lie in the cut polytope"""
        for trial in range(10):
            M, U = sample_kernel_matrix(gw_kernel, 3, 5, substream(trial, 'cut-check'))
            self.assertTrue(membership_lp(M).member)
            self.assertTrue(is_positive_on_points(gw_kernel, U))

    @slow_test
    def test_kernel_matrices_in_cut_polytope_many(self):
        for trial in range(50):
            M, _ = sample_kernel_matrix(gw_kernel, 4, 5, substream(trial, 'cut-check-slow'))
            self.assertTrue(membership_lp(M).member)


class TestSingleDegree(unittest.TestCase):
    """Test best_single_degree"""

    def test_circle_picks_four(self):
        self.assertEqual(best_single_degree(2).k, 4)

    def test_higher_dimensions_pick_one(self):
        for n in range(3, 11):
            self.assertEqual(best_single_degree(n).k, 1, f"n={n}")

    def test_kmax_invariance(self):
        for n in (3, 5, 8):
            self.assertEqual(best_single_degree(n, kmax=10).k, best_single_degree(n, kmax=40).k)

    def test_kmax_too_small(self):
        with self.assertRaises(DomainError):
            best_single_degree(2, kmax=3)


class TestImprovementTest(unittest.TestCase):
    """Test gw_improvement_test"""

    def test_windmill_kernel_improves(self):
        result = gw_improvement_test(windmill_kernel())
        self.assertTrue(result.improves)
        expected = (1 - math.cos(4 * math.acos(alpha_gw().minimizer))) - (1 - gw_kernel(alpha_gw().minimizer))
        self.assertAlmostEqual(result.margin, expected)

    def test_windmill_reynolds_improves(self):
        self.assertTrue(gw_improvement_test(windmill_reynolds).improves)

    def test_gw_does_not_improve(self):
        result = gw_improvement_test(gw_kernel)
        self.assertFalse(result.improves)
        self.assertAlmostEqual(result.margin, 0.0)

    def test_windmill_margins(self):
        t = alpha_gw().minimizer
        self.assertAlmostEqual(1 - windmill_kernel()(t), 1.995, delta=1e-3)
        self.assertAlmostEqual(1 - windmill_reynolds(t), 1.936, delta=1e-3)


class TestReynolds(unittest.TestCase):
    """Test Reynolds transforms of sign functions"""

    def test_halfspace_is_grothendieck(self):
        f = HalfspaceSign.standard(2)
        ts = np.linspace(-1, 1, 21)
        np.testing.assert_allclose(reynolds_exact_circle(f, ts), gw_kernel(ts), atol=1e-12)

    def test_windmill_exact_matches_closed_form(self):
        ts = np.linspace(-1, 1, 41)
        np.testing.assert_allclose(reynolds_exact_circle(WindmillSign(4), ts), windmill_reynolds(ts), atol=1e-12)

    def test_rotated_halfspace(self):
        f = HalfspaceSign([1.0, 2.0])
        self.assertAlmostEqual(reynolds_exact_circle(f, 0.3), gw_kernel(0.3), places=12)

    def test_constant_sign(self):
        self.assertAlmostEqual(reynolds_exact_circle(ConstantSign(), -0.4), 1.0)

    def test_monte_carlo_within_error(self):
        f = HalfspaceSign.standard(3)
        for t in (-0.7, 0.0, 0.5):
            est = reynolds_estimate(f, t, 20000, substream(3, f'reynolds-{t}'))
            self.assertLess(abs(est.estimate - gw_kernel(t)), 4 * est.std_error + 1e-3)

    def test_monte_carlo_deterministic(self):
        f = WindmillSign(4)
        a = reynolds_estimate(f, 0.2, 5000, substream(9, 'r'), threads=1)
        b = reynolds_estimate(f, 0.2, 5000, substream(9, 'r'), threads=3)
        self.assertEqual(a, b)

    def test_exact_method(self):
        est = reynolds_estimate(WindmillSign(4), 0.1, 0, None, method='exact')
        self.assertEqual(est.std_error, 0.0)

    def test_sample_minimum(self):
        with self.assertRaises(SampleCountError):
            reynolds_estimate(HalfspaceSign.standard(2), 0.0, 10, substream(1, 'r'))

    def test_wrong_dimension(self):
        with self.assertRaises(DimensionMismatchError):
            reynolds_exact_circle(HalfspaceSign.standard(3), 0.0)

    @slow_test
    def test_grothendieck_identity_grid(self):
        f = HalfspaceSign.standard(4)
        for t in np.linspace(-1, 1, 21):
            est = reynolds_estimate(f, float(t), 1_000_000, substream(5, f'groth-{t:.2f}'))
            self.assertLessEqual(abs(est.estimate - gw_kernel(float(t))), 3 * est.std_error + 1e-12)


class TestMixture(unittest.TestCase):
    """Test min_ratio and avidor_zwick_mix"""

    def test_min_ratio_gw(self):
        result = min_ratio(gw_kernel)
        self.assertAlmostEqual(result.value, alpha_gw().value, delta=1e-9)

    def test_min_ratio_grid_size(self):
        with self.assertRaises(DomainError):
            min_ratio(gw_kernel, grid_size=2)

    def test_mix_reaches_alpha_2(self):
        mix = avidor_zwick_mix()
        self.assertAlmostEqual(mix.alpha, ALPHA_2, delta=1e-4)
        self.assertGreater(mix.lam, 0.0)
        self.assertLess(mix.lam, 1.0)

    def test_mix_endpoint_is_gw(self):
        from src.kernels import MixedKernel
        self.assertAlmostEqual(min_ratio(MixedKernel(0.0)).value, alpha_gw().value, delta=1e-9)


if __name__ == '__main__':
    unittest.main()
