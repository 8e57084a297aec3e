"""Tests for mixed Orlicz surface areas in mixed.py."""

import os
import sys
import unittest
from unittest.mock import patch

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area import mixed
from affine_area.errors import EmptyRegionError
from affine_area.funcrep import GaussianPotential, Quadratic, translate
from affine_area.mixed import MixedSpec, common_grid, ith_mixed_as, ith_mixed_v, mixed_orlicz_as, mixed_v
from affine_area.orlicz_core import H_REGISTRY, mixed_integral, orlicz_as, power_h
from affine_area.quadrature import ExpNeg

F = ExpNeg()


def gauss_g(y):
    return np.exp(-0.5 * np.sum(y ** 2, axis=1))


class TestMixedSpec(unittest.TestCase):
    """Validation of component lists."""

    def test_empty_rejected(self):
        with self.assertRaises(ValueError):
            MixedSpec((), (), (), ())

    def test_length_mismatch_rejected(self):
        psi = GaussianPotential(1.0, 1)
        with self.assertRaises(ValueError):
            MixedSpec((psi, psi), (power_h(1.0, 1),), (F, F), (F, F))

    def test_dimension_mismatch_rejected(self):
        h = power_h(1.0, 1)
        with self.assertRaises(ValueError):
            MixedSpec((GaussianPotential(1.0, 1), GaussianPotential(1.0, 2)), (h, h), (F, F), (F, F))

    def test_mixed_classes_rejected(self):
        psi = GaussianPotential(1.0, 1)
        with self.assertRaises(ValueError):
            MixedSpec((psi, psi), (power_h(1.0, 1), H_REGISTRY['sqrt']()), (F, F), (F, F))

    def test_disjoint_boxes_rejected(self):
        far = translate(GaussianPotential(1.0, 1), [100.0])
        with self.assertRaises(EmptyRegionError):
            common_grid((GaussianPotential(1.0, 1), far))

    def test_pick_repeats_components(self):
        h = power_h(1.0, 1)
        spec = MixedSpec((GaussianPotential(1.0, 1), Quadratic(np.array([[0.8]]))), (h, h), (F, F), (F, F))
        picked = spec.pick([1, 1, 0])
        self.assertEqual(picked.m, 3)
        self.assertIs(picked.psis[0], spec.psis[1])
        self.assertTrue(picked.grid.same_as(spec.grid))


class TestMixedIntegrals(unittest.TestCase):
    """mixed_v and ith_mixed_v on Gaussian potentials."""

    @classmethod
    def setUpClass(cls):
        cls.h = H_REGISTRY['square']()
        cls.psis = (GaussianPotential(1.0, 1), GaussianPotential(1.3, 1))
        cls.spec = MixedSpec(cls.psis, (cls.h, cls.h), (F, F), (F, F), common_grid(cls.psis, 401))

    def test_equal_components_reduce_to_single(self):
        """With psi_1 = psi_2 the geometric mean collapses to V_h."""
        spec = self.spec.pick([0, 0])
        single = mixed_integral(self.h, F, F, self.psis[0], gauss_g, grid=spec.grid)
        self.assertAlmostEqual(mixed_v(spec, [gauss_g, gauss_g]) / single, 1.0, places=9)

    def test_degenerate_indices(self):
        """i = 0 keeps only the first factor and i = n only the second."""
        gs = [gauss_g, gauss_g]
        first = mixed_v(self.spec.component(0), [gauss_g])
        second = mixed_v(self.spec.component(1), [gauss_g])
        self.assertAlmostEqual(ith_mixed_v(self.spec, 0, gs) / first, 1.0, places=9)
        self.assertAlmostEqual(ith_mixed_v(self.spec, 1, gs) / second, 1.0, places=9)

    def test_index_out_of_range(self):
        with self.assertRaises(ValueError):
            ith_mixed_v(self.spec, 2, [gauss_g, gauss_g])

    def test_ith_needs_two_functions(self):
        with self.assertRaises(ValueError):
            ith_mixed_v(self.spec.pick([0, 1, 0]), 0, [gauss_g] * 3)

    def test_wrong_number_of_test_functions(self):
        with self.assertRaises(ValueError):
            mixed_v(self.spec, [gauss_g])

    def test_distinct_components_below_geometric_mean(self):
        """Hoelder: the 1/2-1/2 integral is at most sqrt(V_1 V_2)."""
        value = mixed_v(self.spec, [gauss_g, gauss_g])
        v1 = mixed_v(self.spec.component(0), [gauss_g])
        v2 = mixed_v(self.spec.component(1), [gauss_g])
        self.assertTrue(np.isfinite(value))
        self.assertGreater(value, 0.0)
        self.assertLessEqual(value, np.sqrt(v1 * v2) * (1.0 + 1e-9))

    def test_common_samples_share_nodes(self):
        sizes = {len(sample) for sample in self.spec.common}
        self.assertEqual(len(sizes), 1)
        self.assertEqual(len(self.spec.full[0]), len(self.spec.full[0].quad))


class TestMixedOptimisation(unittest.TestCase):
    """Joint searches against the single-function areas."""

    @classmethod
    def setUpClass(cls):
        cls.h = power_h(1.0, 1)
        cls.psis = (GaussianPotential(1.0, 1), Quadratic(np.array([[0.8]])))
        cls.spec = MixedSpec(cls.psis, (cls.h, cls.h), (F, F), (F, F), common_grid(cls.psis, 401))

    def test_single_component_matches_orlicz_as(self):
        single = self.spec.component(0)
        joint = mixed_orlicz_as(single).value
        direct = orlicz_as(self.h, F, F, self.psis[0], grid=single.grid).value
        self.assertAlmostEqual(joint / direct, 1.0, places=4)

    def test_ith_degenerate_matches_single(self):
        value = ith_mixed_as(self.spec, 0).value
        single = mixed_orlicz_as(self.spec.component(0)).value
        self.assertAlmostEqual(value / single, 1.0, places=2)

    def test_extra_candidate_shape_checked(self):
        with self.assertRaises(ValueError):
            mixed_orlicz_as(self.spec, extras=[('bad', (np.zeros(3),))])

    def test_record_has_value(self):
        record = mixed_orlicz_as(self.spec).to_record()
        self.assertIn('value', record)
        self.assertGreater(record['value'], 0.0)

    def test_repeated_component_matches_single(self):
        """A two-component search over psi, psi agrees with the one-component search."""
        doubled = mixed_orlicz_as(self.spec.pick([0, 0])).value
        single = mixed_orlicz_as(self.spec.component(0)).value
        self.assertAlmostEqual(doubled / single, 1.0, places=3)

    def test_rejected_candidate_is_logged(self):
        """A candidate whose integral fails scores NaN and leaves a debug line."""
        objective = mixed._joint_objective(self.spec, [0.5, 0.5], np.sqrt(2.0 * np.pi), 'pair')
        logs = tuple(np.zeros(len(sample)) for sample in self.spec.full)
        with patch.object(mixed, '_weighted', side_effect=ArithmeticError('overflow')), \
                patch.object(mixed, 'debug') as debug:
            value = objective(logs)
        self.assertTrue(np.isnan(value))
        debug.assert_called_once()
        self.assertIn('ArithmeticError: overflow', debug.call_args[0][1])


if __name__ == '__main__':
    unittest.main()
