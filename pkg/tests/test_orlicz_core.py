"""Tests for Orlicz functions and the convex-function surface areas in orlicz_core.py."""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.funcrep import GaussianPotential, Quadratic, auto_grid
from affine_area.orlicz_core import (
    H_REGISTRY,
    PHI,
    PSI,
    CandidateFamily,
    OrliczFunction,
    as_bound,
    asp_direct,
    asp_variational,
    composed_with_inverse,
    constant_h,
    ellipsoid_as_reference,
    ellipsoid_gp_reference,
    functional_sample,
    gaussian_target,
    gp,
    mixed_integral,
    orlicz_as,
    orlicz_gm,
    power_h,
    shape_of,
)
from affine_area.quadrature import ExpNeg

ROOT_2PI = np.sqrt(2.0 * np.pi)


class TestOrliczFunctions(unittest.TestCase):
    """Class tags, monotonicity and inverses of h."""

    def test_power_classes(self):
        self.assertEqual(power_h(1.0, 2).cls, PHI)
        self.assertEqual(power_h(-1.0, 2).cls, PSI)
        self.assertEqual(power_h(-6.0, 2).cls, PHI)
        self.assertEqual(power_h(1.0, 2).monotonicity, 'decreasing')

    def test_excluded_power(self):
        with self.assertRaises(ValueError):
            power_h(-2.0, 2)

    def test_class_mismatch_rejected(self):
        """sqrt is concave, so tagging it Phi fails."""
        with self.assertRaises(ValueError):
            OrliczFunction('sqrt', np.sqrt, PHI)

    def test_unknown_class_rejected(self):
        with self.assertRaises(ValueError):
            OrliczFunction('square', np.square, 'Omega')

    def test_nonpositive_argument_rejected(self):
        with self.assertRaises(ValueError):
            H_REGISTRY['square']()(np.array([0.0]))

    def test_inverse(self):
        self.assertAlmostEqual(H_REGISTRY['square']().inverse(4.0), 2.0)
        self.assertAlmostEqual(H_REGISTRY['log1p']().inverse(np.log(3.0)), 2.0, places=8)
        with self.assertRaises(ValueError):
            constant_h(2.0).inverse(2.0)

    def test_submultiplicative_flags(self):
        self.assertTrue(H_REGISTRY['inv']().submultiplicative)
        self.assertTrue(constant_h().submultiplicative)
        self.assertFalse(H_REGISTRY['square']().submultiplicative)

    def test_composed_with_inverse(self):
        """square o sqrt^{-1} is t^4."""
        H = composed_with_inverse(H_REGISTRY['square'](), H_REGISTRY['sqrt']())
        np.testing.assert_allclose(H(np.array([2.0, 0.5])), [16.0, 0.0625])

    def test_shape_of(self):
        shape = shape_of(np.sqrt)
        self.assertTrue(shape['increasing'])
        self.assertTrue(shape['concave'])
        self.assertFalse(shape['convex'])

    def test_registry_entries_construct(self):
        for name in ('sqrt', 'square', 'inv', 'log1p', 'inv1p'):
            self.assertIn(H_REGISTRY[name]().cls, (PHI, PSI))


class TestReferences(unittest.TestCase):

    def test_unit_gaussian_reference(self):
        """With c = 1 the reference is sqrt(2 pi) h(1)."""
        self.assertAlmostEqual(ellipsoid_as_reference(power_h(1.0, 1), ExpNeg(), 1.0, 1), ROOT_2PI, places=8)
        self.assertAlmostEqual(ellipsoid_gp_reference(1.0, ExpNeg(), 1.0, 1), ROOT_2PI, places=8)
        self.assertAlmostEqual(gaussian_target(2), 2.0 * np.pi)

    def test_unknown_family_rejected(self):
        with self.assertRaises(ValueError):
            CandidateFamily('spline')
        with self.assertRaises(ValueError):
            CandidateFamily('perturbation', logconcave_only=True)


class TestGaussianAreas(unittest.TestCase):
    """Surface areas of c^2|x|^2/2 in one dimension against their closed forms."""

    @classmethod
    def setUpClass(cls):
        cls.F = ExpNeg()
        cls.psi = GaussianPotential(1.0, 1)
        cls.grid = auto_grid(cls.psi, 801)
        cls.sample = functional_sample(cls.psi, cls.F, cls.F, cls.grid)

    def test_orlicz_as_matches_closed_form(self):
        h = power_h(1.0, 1)
        ref = ellipsoid_as_reference(h, self.F, 1.0, 1)
        result = orlicz_as(h, self.F, self.F, self.psi, sample=self.sample, reference=ref)
        self.assertLess(abs(result.bound_gap), 0.01)

    def test_psi_class_closed_form(self):
        h = H_REGISTRY['sqrt']()
        ref = ellipsoid_as_reference(h, self.F, 1.0, 1)
        result = orlicz_as(h, self.F, self.F, self.psi, sample=self.sample, reference=ref)
        self.assertLess(abs(result.bound_gap), 0.01)

    def test_affine_at_most_geominimal_for_phi(self):
        """The geominimal problem searches a subset, so its infimum is not smaller."""
        h = H_REGISTRY['square']()
        as_value = orlicz_as(h, self.F, self.F, self.psi, sample=self.sample).value
        gm_value = orlicz_gm(h, self.F, self.F, self.psi, sample=self.sample).value
        self.assertLessEqual(as_value, gm_value * (1.0 + 1e-9))

    def test_bound_holds_for_phi(self):
        h = power_h(2.0, 1)
        result = orlicz_as(h, self.F, self.F, self.psi, sample=self.sample)
        self.assertLessEqual(result.value, as_bound(h, self.F, self.F, self.psi, sample=self.sample) * (1.0 + 1e-6))

    def test_gp_matches_closed_form(self):
        result = gp(1.0, self.F, self.F, self.psi, sample=self.sample, reference=ellipsoid_gp_reference(1.0, self.F, 1.0, 1))
        self.assertLess(abs(result.bound_gap), 0.01)
        self.assertLess(result.diagnostics['route_discrepancy'], 0.01)

    def test_gp_at_zero_is_integral(self):
        self.assertAlmostEqual(gp(0.0, self.F, self.F, self.psi, sample=self.sample).value / ROOT_2PI, 1.0, places=4)

    def test_mixed_integral_with_base_g(self):
        """g = F2 o psi* turns V_h into h(1) I(F1 o psi)."""
        h = H_REGISTRY['square']()
        value = mixed_integral(h, self.F, self.F, self.psi, lambda y: np.exp(-0.5 * y[:, 0] ** 2), sample=self.sample)
        self.assertAlmostEqual(value / ROOT_2PI, 1.0, places=4)


class TestLpAffineArea(unittest.TestCase):
    """Direct integral against the variational formula."""

    @classmethod
    def setUpClass(cls):
        cls.F = ExpNeg()
        cls.psi = Quadratic(np.array([[0.8]]))
        cls.sample = functional_sample(cls.psi, cls.F, cls.F, auto_grid(cls.psi, 801))

    def test_variational_matches_direct(self):
        for p in (1.0, 2.0, -0.5):
            result = asp_variational(p, self.F, self.F, self.psi, sample=self.sample)
            self.assertLess(abs(result.bound_gap), 0.02, msg=f"p={p}")

    def test_p_zero_is_integral(self):
        direct = asp_direct(0.0, self.F, self.F, self.psi, sample=self.sample)
        self.assertAlmostEqual(direct, self.sample.i1.value, places=10)

    def test_excluded_p(self):
        with self.assertRaises(ValueError):
            asp_direct(-1.0, self.F, self.F, self.psi, sample=self.sample)


if __name__ == '__main__':
    unittest.main()
