"""Tests for weights, grid quadrature and the radial integrals in quadrature.py."""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.errors import NumericalError
from affine_area.funcrep import GaussianPotential, Grid, Quadratic, SEnvelope, auto_grid
from affine_area.quadrature import (
    ConstOne,
    ExpNeg,
    PowerWeight,
    ScaledShifted,
    Tabulated,
    integral_f_s,
    integrate_dual,
    integrate_weight,
    omega_ns,
    radial_integral,
    sample_regular,
    tree_sum,
)
from affine_area.sconcave import sconcave_pair
from affine_area.transforms import legendre

ROOT_2PI = np.sqrt(2.0 * np.pi)


class TestWeights(unittest.TestCase):
    """Weight function validation and flags."""

    def test_power_weight_needs_positive_alpha(self):
        with self.assertRaises(ValueError):
            PowerWeight(0.0)

    def test_shifted_needs_positive_scale(self):
        with self.assertRaises(ValueError):
            ScaledShifted(ExpNeg(), 1.0, 0.0)

    def test_shifted_values(self):
        F = ScaledShifted(ExpNeg(), 2.0, 0.5)
        self.assertAlmostEqual(float(F(np.array(3.0))), 0.5 * np.exp(-1.0))
        self.assertTrue(F.is_decreasing)

    def test_tabulated_validation(self):
        with self.assertRaises(ValueError):
            Tabulated(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.5, 0.2]))
        with self.assertRaises(ValueError):
            Tabulated(np.array([0.0, 1.0]), np.array([1.0, -0.5]))

    def test_tabulated_matches_knots_and_tail(self):
        """Log-linear interpolation reproduces an exponential, tail included."""
        knots = np.linspace(0.0, 4.0, 9)
        table = Tabulated(knots, np.exp(-knots))
        np.testing.assert_allclose(table(np.array([1.25, 6.0])), np.exp([-1.25, -6.0]), rtol=1e-12)
        self.assertTrue(table.is_logconcave)
        self.assertTrue(table.is_decreasing)


class TestTreeSum(unittest.TestCase):

    def test_values(self):
        self.assertEqual(tree_sum(np.array([1.0, 2.0, 3.0])), 6.0)
        self.assertEqual(tree_sum(np.array([])), 0.0)


class TestRadialIntegral(unittest.TestCase):
    """I(F, c) by adaptive 1-D quadrature."""

    def test_gaussian_normalisation(self):
        for n in (1, 2, 3):
            value = radial_integral(ExpNeg(), 1.0, n).value
            self.assertAlmostEqual(value / (2.0 * np.pi) ** (n / 2.0), 1.0, places=8)

    def test_scaling_in_c(self):
        """I(F, c) = c^{-n} I(F, 1)."""
        F = PowerWeight(4.0)
        for n in (1, 2):
            unit = radial_integral(F, 1.0, n).value
            self.assertAlmostEqual(radial_integral(F, 2.5, n).value / unit, 2.5 ** (-n), places=8)

    def test_divergent_weight_rejected(self):
        with self.assertRaises(NumericalError):
            radial_integral(ConstOne(), 1.0, 2)

    def test_ball_radius(self):
        """Over a ball of radius 1 the constant weight integrates to the ball volume."""
        self.assertAlmostEqual(radial_integral(ConstOne(), 1.0, 2, radius=1.0).value, np.pi, places=8)

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            radial_integral(ExpNeg(), 0.0, 1)
        with self.assertRaises(ValueError):
            radial_integral(ExpNeg(), 1.0, 0)


class TestOmega(unittest.TestCase):

    def test_one_dimensional_half(self):
        self.assertAlmostEqual(omega_ns(1, 0.5), 4.0 * np.sqrt(2.0) / 3.0, places=10)

    def test_tends_to_gaussian(self):
        """Small s approaches the Gaussian constant (2 pi)^{n/2}."""
        self.assertAlmostEqual(omega_ns(2, 1e-4) / (2.0 * np.pi), 1.0, places=3)

    def test_rejects_nonpositive_s(self):
        with self.assertRaises(ValueError):
            omega_ns(1, 0.0)

    def test_matches_envelope_integral(self):
        """The closed form agrees with the grid integral of k_s to 0.5%."""
        for n, count in ((1, 801), (2, 301)):
            for s in (0.25, 0.5, 1.0):
                psi = SEnvelope(s, 1.0, n)
                sp = sconcave_pair(psi, s, grid=auto_grid(psi, count))
                value = integral_f_s(sp.sdual, strict=False).direct.value
                self.assertAlmostEqual(value / omega_ns(n, s), 1.0, delta=0.005, msg=f"n={n} s={s}")


class TestClipping(unittest.TestCase):
    """clip=True drops blown-up edge cells and nothing else."""

    def setUp(self):
        self.sample = sample_regular(GaussianPotential(1.0, 1), Grid.cube(30.0, 1, 601))
        self.vals = np.exp(-self.sample.region.values)

    def test_wide_support_kept(self):
        """Most nodes sit deep in the tail; the mode must survive."""
        result = self.sample.total(self.vals, clip=True)
        self.assertEqual(result.clipped_points, 0)
        self.assertAlmostEqual(result.value / ROOT_2PI, 1.0, places=4)

    def test_edge_blowup_clipped(self):
        vals = self.vals.copy()
        vals[-1] = 1e20
        self.assertTrue(self.sample.region.boundary_mask()[-1])
        result = self.sample.total(vals, clip=True)
        self.assertEqual(result.clipped_points, 1)
        self.assertAlmostEqual(result.value / ROOT_2PI, 1.0, places=4)

    def test_interior_spike_not_clipped(self):
        vals = self.vals.copy()
        vals[len(vals) // 2] = 1e20
        result = self.sample.total(vals, clip=True)
        self.assertEqual(result.clipped_points, 0)
        self.assertGreater(result.value, 1e18)


class TestGridQuadrature(unittest.TestCase):
    """Midpoint sums over the regular set."""

    def test_gaussian_integral(self):
        result = integrate_weight(ExpNeg(), GaussianPotential(1.0, 1), Grid.cube(8.0, 1, 801))
        self.assertAlmostEqual(result.value / ROOT_2PI, 1.0, places=4)
        self.assertGreater(result.points_used, 0)

    def test_negative_integrand_rejected(self):
        sample = sample_regular(Quadratic(np.array([[1.0]])), Grid.cube(3.0, 1, 61))
        with self.assertRaises(NumericalError):
            sample.total(-np.ones(len(sample)))

    def test_wrong_length_rejected(self):
        sample = sample_regular(Quadratic(np.array([[1.0]])), Grid.cube(3.0, 1, 61))
        with self.assertRaises(ValueError):
            sample.total(np.ones(len(sample) + 1))

    def test_dual_modes_agree(self):
        """The dual-side sum and the pushforward give the same Gaussian integral."""
        pair = legendre(GaussianPotential(1.0, 1), counts=801)
        both = integrate_dual(lambda y: np.exp(-0.5 * np.sum(y ** 2, axis=1)), pair)
        self.assertLessEqual(both.discrepancy, both.tolerance)
        self.assertAlmostEqual(both.value / ROOT_2PI, 1.0, places=3)

    def test_unknown_mode_rejected(self):
        pair = legendre(GaussianPotential(1.0, 1), counts=101)
        with self.assertRaises(ValueError):
            integrate_dual(lambda y: np.ones(len(y)), pair, mode='sideways')


if __name__ == '__main__':
    unittest.main()
