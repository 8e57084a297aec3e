"""Tests for Legendre and s-duality, the breve envelope and centering in transforms.py."""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.errors import UnboundedEnvelopeError
from affine_area.funcrep import GaussianPotential, Grid, Quadratic, SEnvelope, auto_grid, sample_on, translate
from affine_area.quadrature import ConstOne, ExpNeg
from affine_area.transforms import breve, legendre, s_dual, santalo_center, t_map


class TestLegendre(unittest.TestCase):
    """Closed-form and discrete Legendre transforms."""

    def test_gaussian_closed_form(self):
        pair = legendre(GaussianPotential(2.0, 1), counts=101)
        self.assertIsInstance(pair.dual, GaussianPotential)
        self.assertAlmostEqual(pair.dual.c, 0.5)
        self.assertEqual(pair.involution_error, 0.0)

    def test_sampled_quadratic(self):
        """The discrete transform of x^2 matches y^2/4 away from the box edge."""
        exact = Quadratic(np.array([[1.0]]))
        pair = legendre(sample_on(exact, auto_grid(exact, 401)))
        ys = np.linspace(-4.0, 4.0, 33).reshape(-1, 1)
        np.testing.assert_allclose(pair.dual.values(ys), ys[:, 0] ** 2 / 4.0, atol=1e-3)
        self.assertLess(pair.involution_error, 1e-2)

    def test_young_inequality_on_nodes(self):
        exact = Quadratic(np.array([[1.0]]))
        pair = legendre(sample_on(exact, auto_grid(exact, 201)))
        self.assertGreaterEqual(pair.young_violation(), -1e-12)

    def test_sampled_planar_quadratic_on_coarse_grid(self):
        """Off-node maximisers are recovered on a 41x41 grid."""
        A = np.diag([1.0, 2.0])
        exact = Quadratic(A)
        grid = Grid.cube(2.4, 2, 41)
        pair = legendre(sample_on(exact, grid))
        ys = pair.dual_grid.points
        inner = np.all(np.abs(ys @ np.linalg.inv(2.0 * A)) <= 0.8 * 2.4, axis=1)
        self.assertTrue(inner.any())
        np.testing.assert_allclose(pair.dual.values(ys[inner]), exact.conjugate().values(ys[inner]), atol=1e-3)


class TestSDual(unittest.TestCase):
    """s-duality of the envelope family."""

    def test_envelope_dual_is_envelope(self):
        pair = s_dual(SEnvelope(0.5, 2.0, 1), 0.5, counts=201)
        self.assertIsInstance(pair.dual, SEnvelope)
        self.assertAlmostEqual(pair.dual.c, 0.5)
        self.assertEqual(pair.flagged_points, 0)
        self.assertLess(pair.involution_error, 1e-9)

    def test_psitilde_positive(self):
        pair = s_dual(SEnvelope(0.5, 1.0, 1), 0.5, counts=201)
        self.assertTrue(np.all(pair.psitilde_samples > 0))
        self.assertTrue(np.all(pair.u_samples > 0))

    def test_t_map_of_envelope(self):
        """On the envelope the gradient map is x -> c^2 x."""
        pair = s_dual(SEnvelope(0.5, 2.0, 1), 0.5, counts=201)
        np.testing.assert_allclose(t_map(pair, [0.3]), [1.2])
        with self.assertRaises(ValueError):
            t_map(pair, [1.0])

    def test_nonpositive_s_rejected(self):
        with self.assertRaises(ValueError):
            s_dual(GaussianPotential(1.0, 1), 0.0)


class TestBreve(unittest.TestCase):
    """The log-concave envelope of two weights."""

    def test_equal_exponentials(self):
        """For F1 = F2 = e^{-t} the envelope is e^{-t} itself."""
        table = breve(ExpNeg(), ExpNeg())
        ts = np.array([0.0, 1.0, 5.0])
        np.testing.assert_allclose(table(ts), np.exp(-ts), rtol=1e-3)
        self.assertTrue(table.is_decreasing)

    def test_unbounded_pair_rejected(self):
        with self.assertRaises(UnboundedEnvelopeError):
            breve(ConstOne(), ExpNeg())

    def test_bad_range_rejected(self):
        with self.assertRaises(ValueError):
            breve(ExpNeg(), ExpNeg(), t_range=(1.0, 0.0))


class TestCentering(unittest.TestCase):
    """Santalo-point centering."""

    def test_symmetric_input_unchanged(self):
        psi = GaussianPotential(1.0, 1)
        z0, centered = santalo_center(psi, ExpNeg(), ExpNeg(), auto_grid(psi, 401))
        np.testing.assert_array_equal(z0, [0.0])
        self.assertIs(centered, psi)

    def test_translation_undone(self):
        """psi(x + 1/2) is centred by z0 = -1/2."""
        psi = translate(GaussianPotential(1.0, 1), [0.5])
        z0, _ = santalo_center(psi, ExpNeg(), ExpNeg(), auto_grid(psi, 401))
        self.assertAlmostEqual(z0[0], -0.5, places=2)


if __name__ == '__main__':
    unittest.main()
