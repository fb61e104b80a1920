"""
Unit Tests for Instances Module
Tests partitions, A_z matrices, the rank-n heuristic and the ratio reports
"""

import csv
import math
import unittest
import sys
import os

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src import config
from src.cutpoly import WeightedInstance, max_cut_exact
from src.exceptions import DimensionMismatchError, DomainError, SampleCountError
from src.gapbound import SampleGrid, point_mass_certificate
from src.instances import (
    MODE_EXACT, MODE_HEURISTIC, Embedding, RatioReport, build_partition, estimate_Az,
    hyperplane_rounding, instance_from_certificate, ratio_trend, refine_partition,
    sdp_objective, sdp_rank_n_heuristic, write_ratio_csv
)
from src.kernels import random_sphere_points
from test.test_utils import (
    ALPHA_2, ALPHA_GW, C5_MAX_CUT, C5_SDP2, TestEnvironment, c5_instance, random_instance, slow_test
)


class TestPartitions(unittest.TestCase):
    """Test build_partition and refine_partition"""

    def test_equal_arcs(self):
        P = build_partition(2, 5)
        self.assertEqual(P.num_cells, 5)
        self.assertTrue(P.is_arcs)
        self.assertAlmostEqual(P.diameter, 2.0 * math.sin(math.pi / 5), places=12)
        np.testing.assert_array_equal(P.assign(P.representatives), np.arange(5))

    def test_hemispheres(self):
        P = build_partition(3, 2)
        self.assertEqual(P.diameter, 2.0)
        labels = P.assign(np.array([[0.3, 0.1, 0.9], [-0.3, 0.1, 0.9]]) /
                          np.linalg.norm([0.3, 0.1, 0.9]))
        self.assertEqual(list(labels), [0, 1])

    def test_voronoi_cells(self):
        P = build_partition(3, 6, seed=4)
        self.assertEqual(P.num_cells, 6)
        np.testing.assert_array_equal(P.assign(P.representatives), np.arange(6))
        self.assertGreater(P.diameter, 0.0)
        self.assertLessEqual(P.diameter, 2.0)

    def test_seeded(self):
        a = build_partition(3, 5, seed=9)
        b = build_partition(3, 5, seed=9)
        np.testing.assert_array_equal(a.representatives, b.representatives)

    def test_domain(self):
        with self.assertRaises(DomainError):
            build_partition(1, 4)
        with self.assertRaises(DomainError):
            build_partition(3, 1)

    def test_point_dimension(self):
        with self.assertRaises(DimensionMismatchError):
            build_partition(3, 4).assign(np.ones((2, 2)))

    def test_nested_arcs(self):
        P = build_partition(2, 4)
        Q = refine_partition(P, 10)
        self.assertEqual(Q.num_cells, 10)
        self.assertEqual(Q.depth(), 1)
        self.assertLessEqual(Q.diameter, P.diameter)
        X = random_sphere_points(2, 500, np.random.default_rng(0))
        np.testing.assert_array_equal(Q.parents[Q.assign(X)], P.assign(X))

    def test_nested_voronoi(self):
        P = build_partition(3, 4, seed=1)
        Q = refine_partition(P, 9, seed=2)
        self.assertEqual(Q.num_cells, 9)
        X = random_sphere_points(3, 500, np.random.default_rng(3))
        np.testing.assert_array_equal(Q.parents[Q.assign(X)], P.assign(X))

    def test_refine_cannot_shrink(self):
        with self.assertRaises(DomainError):
            refine_partition(build_partition(2, 6), 3)


class TestAz(unittest.TestCase):
    """Test estimate_Az"""

    def test_exact_circle_mass(self):
        cert = point_mass_certificate(2)
        result = estimate_Az(build_partition(2, 8), cert.grid)
        self.assertEqual(result.mode, MODE_EXACT)
        self.assertEqual(result.noise, 0.0)
        self.assertAlmostEqual(result.mass, float(cert.grid.z.sum()), places=10)
        A = result.instance.weights
        np.testing.assert_array_equal(A, A.T)
        np.testing.assert_array_equal(np.diag(A), np.zeros(8))
        self.assertAlmostEqual(A.sum() + result.removed_diagonal, result.mass, places=10)

    def test_antipodal_weight(self):
        """All mass at t = -1 pairs each half circle with the other"""
        grid = SampleGrid(np.array([-1.0]), np.array([0.5]))
        result = estimate_Az(build_partition(2, 2), grid)
        self.assertAlmostEqual(result.removed_diagonal, 0.0, places=12)
        self.assertAlmostEqual(result.instance.weights[0, 1], 0.25, places=12)

    def test_monte_carlo(self):
        cert = point_mass_certificate(3)
        P = build_partition(3, 4, seed=1)
        result = estimate_Az(P, cert.grid, samples=config.MIN_AZ_SAMPLES, seed=5)
        self.assertEqual(result.mode, 'monte-carlo')
        self.assertAlmostEqual(result.mass, float(cert.grid.z.sum()), places=12)
        self.assertGreater(result.noise, 0.0)

    def test_monte_carlo_is_deterministic(self):
        cert = point_mass_certificate(3)
        P = build_partition(3, 4, seed=1)
        one = estimate_Az(P, cert.grid, samples=2 * config.MC_CHUNK_SIZE, seed=5, threads=1)
        many = estimate_Az(P, cert.grid, samples=2 * config.MC_CHUNK_SIZE, seed=5, threads=3)
        np.testing.assert_array_equal(one.instance.weights, many.instance.weights)

    def test_monte_carlo_matches_exact_circle(self):
        cert = point_mass_certificate(2)
        P = build_partition(2, 4)
        exact = estimate_Az(P, cert.grid).instance.weights
        mc = estimate_Az(P, cert.grid, samples=config.DEFAULT_MC_SAMPLES, seed=8, exact=False)
        np.testing.assert_allclose(mc.instance.weights, exact, atol=6 * mc.noise)

    def test_too_few_samples(self):
        with self.assertRaises(SampleCountError):
            estimate_Az(build_partition(3, 4), point_mass_certificate(3).grid, samples=10)

    def test_negative_weight(self):
        grid = SampleGrid(np.array([-0.5, 0.0]), np.array([1.0, -1.0]))
        with self.assertRaises(DomainError):
            estimate_Az(build_partition(2, 4), grid)


class TestHeuristic(unittest.TestCase):
    """Test sdp_rank_n_heuristic and rounding"""

    def test_c5_on_the_circle(self):
        result = sdp_rank_n_heuristic(c5_instance(), 2, seed=3)
        self.assertAlmostEqual(result.value, C5_SDP2, places=5)
        self.assertAlmostEqual(C5_MAX_CUT / result.value, ALPHA_2, places=5)
        self.assertEqual(result.embedding.dim, 2)

    def test_sign_patterns_are_exact(self):
        result = sdp_rank_n_heuristic(c5_instance(), 1, restarts=16)
        self.assertAlmostEqual(result.value, C5_MAX_CUT, places=12)

    def test_value_matches_embedding(self):
        A = c5_instance()
        result = sdp_rank_n_heuristic(A, 3, restarts=4, seed=1)
        self.assertAlmostEqual(sdp_objective(A, result.embedding.vectors), result.value, places=12)

    def test_warm_start_is_kept(self):
        A = c5_instance()
        theta = 4.0 * np.pi * np.arange(5) / 5.0
        warm = Embedding(np.column_stack([np.cos(theta), np.sin(theta)]))
        result = sdp_rank_n_heuristic(A, 3, restarts=1, sweeps=1, seed=0, warm_starts=[warm])
        self.assertGreaterEqual(result.value, C5_SDP2 - 1e-9)

    def test_warm_start_size(self):
        with self.assertRaises(DimensionMismatchError):
            sdp_rank_n_heuristic(c5_instance(), 2, warm_starts=[Embedding(np.eye(2))])

    def test_empty_instance(self):
        result = sdp_rank_n_heuristic(WeightedInstance(np.zeros((0, 0))), 2)
        self.assertEqual(result.value, 0.0)

    def test_gw_sandwich(self):
        """sdp_1 >= alpha_GW sdp_n on 100 random instances of at most 14 vertices"""
        rng = np.random.default_rng(12)
        for trial in range(100):
            A = random_instance(rng, int(rng.integers(3, 15)))
            sdp1, _ = max_cut_exact(A)
            heur = sdp_rank_n_heuristic(A, 3, restarts=2, sweeps=50, seed=int(rng.integers(1000)))
            self.assertGreaterEqual(sdp1, ALPHA_GW * heur.value - 1e-9)
            expected = hyperplane_rounding(heur.embedding, A)
            self.assertGreaterEqual(expected, ALPHA_GW * heur.value - 1e-9)
            self.assertLessEqual(expected, sdp1 + 1e-9)

    def test_nondecreasing_in_dimension(self):
        """Padding the best rank-k embedding starts the rank-(k+1) ascent"""
        rng = np.random.default_rng(77)
        for trial in range(10):
            A = random_instance(rng, 10)
            previous = sdp_rank_n_heuristic(A, 1, restarts=4, seed=trial)
            for n in (2, 3, 4):
                current = sdp_rank_n_heuristic(A, n, restarts=2, seed=trial,
                                               warm_starts=[previous.embedding])
                self.assertGreaterEqual(current.value, previous.value - 1e-9, f"trial {trial}, n={n}")
                previous = current

    def test_sampled_rounding(self):
        A = c5_instance()
        heur = sdp_rank_n_heuristic(A, 2, seed=3)
        value = hyperplane_rounding(heur.embedding, A, 'sampled', count=200, seed=1)
        self.assertAlmostEqual(value, C5_MAX_CUT, places=9)

    def test_rounding_errors(self):
        emb = Embedding(np.eye(2))
        with self.assertRaises(DimensionMismatchError):
            hyperplane_rounding(emb, c5_instance())
        with self.assertRaises(DomainError):
            hyperplane_rounding(Embedding(np.eye(5)), c5_instance(), mode='best')


class TestEmbedding(unittest.TestCase):
    """Test the Embedding type"""

    def test_unit_vectors(self):
        with self.assertRaises(DomainError):
            Embedding(np.array([[1.0, 1.0]]))

    def test_padded(self):
        emb = Embedding(np.eye(2)).padded(4)
        self.assertEqual(emb.dim, 4)
        with self.assertRaises(DimensionMismatchError):
            Embedding(np.eye(3)).padded(2)

    def test_lifted(self):
        emb = Embedding(np.eye(2)).lifted([0, 0, 1])
        np.testing.assert_array_equal(emb.vectors, [[1, 0], [1, 0], [0, 1]])


class TestRatioReports(unittest.TestCase):
    """Test instance_from_certificate and ratio_trend"""

    def setUp(self):
        self.env = TestEnvironment()
        self.env.setup()
        self.cert = point_mass_certificate(2)

    def tearDown(self):
        self.env.teardown()

    def test_two_cells(self):
        report = instance_from_certificate(self.cert, 2, seed=0)
        self.assertEqual(report.m, 2)
        self.assertEqual(report.sdp1_mode, MODE_EXACT)
        self.assertTrue(report.demonstrated)
        self.assertAlmostEqual(report.ratio, 1.0, places=9)

    def test_ratio_between_gw_and_one(self):
        report = instance_from_certificate(self.cert, 10, seed=0)
        self.assertGreaterEqual(report.ratio, ALPHA_GW - 1e-6)
        self.assertLessEqual(report.ratio, 1.0 + 1e-9)
        self.assertEqual(report.instance.n_vertices, 10)
        self.assertEqual(report.noise, 0.0)

    def test_no_weights(self):
        cert = point_mass_certificate(2)
        cert.grid.z = np.zeros(1)
        with self.assertRaises(DomainError):
            instance_from_certificate(cert, 4)

    def test_trend(self):
        reports = ratio_trend(self.cert, [4, 8, 12], seed=1)
        self.assertEqual([r.m for r in reports], [4, 8, 12])
        for r in reports:
            self.assertEqual(r.sdp1_mode, MODE_EXACT)
            self.assertGreaterEqual(r.ratio, ALPHA_GW - 1e-6)
        self.assert_nondecreasing(reports)
        self.assertEqual(reports[-1].partition.depth(), 2)

    def assert_nondecreasing(self, reports):
        """Nested refinements keep every coarse cut and embedding"""
        for coarse, fine in zip(reports, reports[1:]):
            self.assertGreaterEqual(fine.sdp1, coarse.sdp1 - 1e-9 * max(1.0, coarse.sdp1))
            self.assertGreaterEqual(fine.sdpn, coarse.sdpn - 1e-9 * max(1.0, coarse.sdpn))

    def test_trend_order(self):
        with self.assertRaises(DomainError):
            ratio_trend(self.cert, [8, 4])
        with self.assertRaises(DomainError):
            ratio_trend(self.cert, [])

    def test_heuristic_mode_is_not_demonstrated(self):
        report = RatioReport(40, 1.0, MODE_HEURISTIC, 1.1, 1.0 / 1.1, 0.0)
        self.assertFalse(report.demonstrated)

    def test_write_csv(self):
        path = self.env.path('trend.csv')
        reports = ratio_trend(self.cert, [4, 6], seed=1)
        write_ratio_csv(path, reports)
        with open(path, newline='', encoding='utf-8') as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 2)
        self.assertEqual(list(rows[0].keys()), config.RATIO_CSV_FIELDS)
        self.assertEqual(float(rows[1]['ratio']), reports[1].ratio)

    @slow_test
    def test_trend_on_the_circle(self):
        reports = ratio_trend(self.cert, [8, 16, 24], seed=3)
        self.assertEqual([r.m for r in reports], [8, 16, 24])
        for r in reports:
            self.assertEqual(r.sdp1_mode, MODE_EXACT)
            self.assertGreaterEqual(r.ratio, ALPHA_GW - 0.01)
            self.assertLessEqual(r.ratio, 1.0 + 1e-9)
        self.assert_nondecreasing(reports)


if __name__ == '__main__':
    unittest.main()
