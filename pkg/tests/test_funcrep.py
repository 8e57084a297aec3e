"""Tests for grids, function representations and the CSV format in funcrep.py."""

import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.funcrep import (
    AffineComposite,
    GaussianPotential,
    Grid,
    Quadratic,
    SampledConvex,
    SEnvelope,
    SumRep,
    auto_grid,
    compose_linear,
    dilate,
    evaluate,
    gradient,
    hessian,
    load_csv,
    perturbed_quadratic,
    regular_set,
    sample_on,
    save_csv,
    translate,
)


class TestGrid(unittest.TestCase):
    """Grid construction and validation."""

    def test_cube_spacing(self):
        grid = Grid.cube(2.0, 2, 41)
        np.testing.assert_allclose(grid.spacing, [0.1, 0.1])
        self.assertEqual(grid.points.shape, (41 * 41, 2))

    def test_too_few_samples_rejected(self):
        with self.assertRaises(ValueError):
            Grid.cube(1.0, 1, 4)

    def test_inverted_bounds_rejected(self):
        with self.assertRaises(ValueError):
            Grid([1.0], [-1.0], (11,))

    def test_single_count_broadcast(self):
        """One count applies to every axis."""
        grid = Grid([-1.0, -2.0], [1.0, 2.0], (9,))
        self.assertEqual(grid.counts, (9, 9))

    def test_auto_grid_count_is_odd(self):
        grid = auto_grid(GaussianPotential(1.0, 1), 100)
        self.assertEqual(grid.counts, (101,))


class TestClosedForms(unittest.TestCase):
    """Closed-form families and their conjugates."""

    def test_quadratic_rejects_indefinite(self):
        with self.assertRaises(ValueError):
            Quadratic(np.diag([1.0, -1.0]))

    def test_quadratic_rejects_asymmetric(self):
        with self.assertRaises(ValueError):
            Quadratic(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_quadratic_conjugate(self):
        """(<Ax,x> + a)* = <A^{-1}y,y>/4 - a."""
        A = np.diag([1.0, 2.0])
        conj = Quadratic(A, 0.3).conjugate()
        np.testing.assert_allclose(conj.A, np.diag([0.25, 0.125]))
        self.assertAlmostEqual(conj.a, -0.3)

    def test_gaussian_conjugate_inverts_c(self):
        conj = GaussianPotential(2.0, 3).conjugate()
        self.assertAlmostEqual(conj.c, 0.5)
        self.assertEqual(conj.n, 3)

    def test_gaussian_rejects_nonpositive_c(self):
        with self.assertRaises(ValueError):
            GaussianPotential(0.0, 1)

    def test_envelope_infinite_outside_radius(self):
        env = SEnvelope(0.5, 1.0, 1)
        self.assertAlmostEqual(env.radius, np.sqrt(2.0))
        self.assertTrue(np.isinf(evaluate(env, [1.5])))
        self.assertAlmostEqual(evaluate(env, [0.0]), 0.0)

    def test_envelope_s_conjugate(self):
        """The s-dual of the envelope with parameter c is the one with 1/c."""
        env = SEnvelope(0.5, 2.0, 2)
        self.assertAlmostEqual(env.s_conjugate(0.5).c, 0.5)
        self.assertIsNone(env.s_conjugate(0.25))

    def test_translated_conjugate(self):
        """(psi(. + z))* = psi* - <z, .>."""
        z = np.array([0.3, -0.2])
        psi = translate(Quadratic(np.diag([1.0, 2.0])), z)
        conj = psi.conjugate()
        y = np.array([[0.7, -1.1]])
        expected = Quadratic(np.diag([1.0, 2.0])).conjugate().values(y) - y @ z
        np.testing.assert_allclose(conj.values(y), expected)


class TestOperations(unittest.TestCase):
    """evaluate, derivatives and the affine operations."""

    def test_evaluate_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            evaluate(GaussianPotential(1.0, 2), [0.0])

    def test_closed_form_hessian(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        np.testing.assert_allclose(hessian(Quadratic(A), [0.3, 0.1]), 2 * A)

    def test_sampled_derivatives_exact_for_quadratic(self):
        """Central differences are exact for quadratics at grid nodes."""
        sampled = sample_on(Quadratic(np.array([[1.5]])), Grid.cube(2.0, 1, 41))
        self.assertAlmostEqual(hessian(sampled, [0.5])[0, 0], 3.0, places=6)
        self.assertAlmostEqual(gradient(sampled, [0.5])[0], 1.5, places=6)

    def test_sampled_derivative_near_boundary_rejected(self):
        sampled = sample_on(Quadratic(np.array([[1.0]])), Grid.cube(2.0, 1, 41))
        with self.assertRaises(ValueError):
            gradient(sampled, [1.95])

    def test_nonconvex_samples_rejected(self):
        grid = Grid.cube(1.0, 1, 21)
        with self.assertRaises(ValueError):
            SampledConvex(grid, -grid.points[:, 0] ** 2)

    def test_nan_samples_rejected(self):
        grid = Grid.cube(1.0, 1, 11)
        samples = np.zeros(11)
        samples[3] = np.nan
        with self.assertRaises(ValueError):
            SampledConvex(grid, samples)

    def test_compose_folds_quadratic(self):
        """Composing a quadratic with T gives the quadratic with T^t A T."""
        A = np.diag([1.0, 2.0])
        T = np.array([[1.0, 1.0], [0.0, 1.0]])
        composed = compose_linear(Quadratic(A), T)
        self.assertIsInstance(composed, Quadratic)
        np.testing.assert_allclose(composed.A, T.T @ A @ T)

    def test_compose_singular_rejected(self):
        with self.assertRaises(ValueError):
            compose_linear(GaussianPotential(1.0, 2), np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_compose_gaussian_pointwise(self):
        T = np.array([[2.0, 0.0], [1.0, 1.0]])
        psi = GaussianPotential(1.0, 2)
        composed = compose_linear(psi, T)
        self.assertIsInstance(composed, AffineComposite)
        x = np.array([[0.4, -0.3]])
        np.testing.assert_allclose(composed.values(x), psi.values(x @ T.T))

    def test_translate_and_dilate(self):
        psi = GaussianPotential(1.0, 1)
        self.assertAlmostEqual(evaluate(translate(psi, [0.5]), [0.5]), psi.values(np.array([[1.0]]))[0])
        self.assertAlmostEqual(evaluate(dilate(psi, 2.0), [1.0]), 2.0)

    def test_perturbed_quadratic_zero_eps(self):
        self.assertIsInstance(perturbed_quadratic(np.eye(2), 0.0), Quadratic)
        self.assertIsInstance(perturbed_quadratic(np.eye(2), 0.1), SumRep)

    def test_regular_set_inside_envelope(self):
        """Regular nodes of an envelope lie strictly inside its ball."""
        env = SEnvelope(0.5, 1.0, 1)
        region = regular_set(env, auto_grid(env, 101))
        self.assertGreater(len(region), 0)
        self.assertTrue(np.all(np.abs(region.points[:, 0]) < env.radius))


class TestCsvFormat(unittest.TestCase):
    """save_csv / load_csv."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'psi.csv')

    def tearDown(self):
        self.tmp.cleanup()

    def test_saved_samples_reload_exactly(self):
        """Values use repr floats, so reloading reproduces every node."""
        grid = Grid.cube(1.5, 2, 7)
        sampled = sample_on(Quadratic(np.array([[1.0, 0.2], [0.2, 2.0]])), grid)
        save_csv(sampled, self.path)
        loaded = load_csv(self.path)
        self.assertEqual(loaded.grid.counts, (7, 7))
        np.testing.assert_array_equal(loaded.samples, sampled.samples)

    def test_infinite_values_survive(self):
        env = SEnvelope(0.5, 1.0, 1)
        save_csv(env, self.path, Grid.cube(2.0, 1, 21))
        loaded = load_csv(self.path)
        self.assertTrue(np.isinf(loaded.samples[0]))
        self.assertEqual(loaded.samples[10], 0.0)

    def test_empty_file_rejected(self):
        open(self.path, 'w').close()
        with self.assertRaises(ValueError):
            load_csv(self.path)

    def test_missing_value_column_rejected(self):
        with open(self.path, 'w') as fh:
            fh.write('x1,y\n0,0\n')
        with self.assertRaises(ValueError):
            load_csv(self.path)

    def test_missing_nodes_rejected(self):
        with open(self.path, 'w') as fh:
            fh.write('x1,value\n')
            for x in (0.0, 0.1, 0.2, 0.3, 0.5):
                fh.write(f'{x},{x * x}\n')
        with self.assertRaises(ValueError):
            load_csv(self.path)


if __name__ == '__main__':
    unittest.main()
