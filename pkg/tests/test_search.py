"""Tests for the Nelder-Mead wrapper in search.py."""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.search import initial_simplex, optimize


class TestOptimize(unittest.TestCase):
    """Simplex search over smooth and partly infinite objectives."""

    def test_finds_bowl_minimum(self):
        result = optimize(lambda x: (x[0] - 1.0) ** 2 + (x[1] + 2.0) ** 2 + 1.0, [np.zeros(2)])
        np.testing.assert_allclose(result.params, [1.0, -2.0], atol=1e-2)
        self.assertAlmostEqual(result.value, 1.0, places=4)
        self.assertTrue(result.converged)

    def test_maximise(self):
        result = optimize(lambda x: 5.0 - (x[0] - 3.0) ** 2, [np.zeros(1)], sense='max')
        self.assertAlmostEqual(result.params[0], 3.0, places=2)
        self.assertAlmostEqual(result.value, 5.0, places=4)

    def test_best_seed_wins(self):
        """Of two basins the deeper one is reported."""
        def two_wells(x):
            return min((x[0] + 2.0) ** 2 + 1.0, (x[0] - 2.0) ** 2)
        result = optimize(two_wells, [np.array([-2.0]), np.array([2.0])])
        self.assertAlmostEqual(result.params[0], 2.0, places=2)

    def test_infinite_region_avoided(self):
        def barrier(x):
            return np.inf if x[0] < 0 else (x[0] - 0.5) ** 2
        result = optimize(barrier, [np.array([1.0])])
        self.assertAlmostEqual(result.params[0], 0.5, places=2)

    def test_zero_dimensional_seed(self):
        result = optimize(lambda x: 7.0, [np.array([])])
        self.assertEqual(result.value, 7.0)
        self.assertEqual(result.iterations, 0)

    def test_bad_sense_rejected(self):
        with self.assertRaises(ValueError):
            optimize(lambda x: 0.0, [np.zeros(1)], sense='up')

    def test_no_seeds_rejected(self):
        with self.assertRaises(ValueError):
            optimize(lambda x: 0.0, [])

    def test_initial_simplex_shape(self):
        simplex = initial_simplex(np.array([1.0, 2.0, 3.0]), step=0.5)
        self.assertEqual(simplex.shape, (4, 3))
        np.testing.assert_allclose(simplex[2] - simplex[0], [0.0, 0.5, 0.0])


if __name__ == '__main__':
    unittest.main()
