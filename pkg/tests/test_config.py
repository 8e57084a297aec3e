"""Tests for the inline function language and JSON config loading in config.py."""

import json
import os
import shutil
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area.config import (
    Component,
    JobConfig,
    config_key_help,
    load_job_config,
    load_suite_config,
    parse_function,
    parse_h,
    parse_weight,
    resolve_config_path,
    suggest,
)
from affine_area.funcrep import GaussianPotential, Quadratic, SEnvelope
from affine_area.orlicz_core import PHI, PSI
from affine_area.quadrature import ConstOne, ExpNeg, PowerWeight, ScaledShifted


class TestParseFunction(unittest.TestCase):
    """kind:key=value specs for psi."""

    def test_gaussian(self):
        psi = parse_function('gaussian:c=2', 3)
        self.assertIsInstance(psi, GaussianPotential)
        self.assertEqual(psi.dim, 3)
        self.assertEqual(psi.c, 2.0)

    def test_quadratic_matrix_with_commas(self):
        psi = parse_function('quad:A=[[1,0],[0,2]],a=0.5')
        self.assertIsInstance(psi, Quadratic)
        np.testing.assert_array_equal(psi.A, [[1.0, 0.0], [0.0, 2.0]])
        self.assertEqual(psi.a, 0.5)

    def test_envelope(self):
        psi = parse_function('senv:s=0.25,c=1', 2)
        self.assertIsInstance(psi, SEnvelope)
        self.assertEqual(psi.s, 0.25)

    def test_matrix_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            parse_function('quad:A=[[1,0],[0,2]]', 3)

    def test_quad_needs_matrix(self):
        with self.assertRaises(ValueError):
            parse_function('quad:a=1')

    def test_unknown_kind_suggests(self):
        with self.assertRaises(ValueError) as ctx:
            parse_function('gausian:c=1')
        self.assertIn("did you mean 'gaussian'", str(ctx.exception))

    def test_unknown_parameter(self):
        with self.assertRaises(ValueError) as ctx:
            parse_function('gaussian:sigma=1')
        self.assertIn('sigma', str(ctx.exception))

    def test_missing_equals(self):
        with self.assertRaises(ValueError):
            parse_function('gaussian:c')

    def test_unbalanced_brackets(self):
        with self.assertRaises(ValueError):
            parse_function('quad:A=[[1,0],[0,2]')


class TestParseWeightAndH(unittest.TestCase):

    def test_weights(self):
        self.assertEqual(parse_weight('exp'), ExpNeg())
        self.assertEqual(parse_weight('one'), ConstOne())
        self.assertEqual(parse_weight('power:alpha=5'), PowerWeight(5.0))
        shifted = parse_weight('shifted')
        self.assertIsInstance(shifted, ScaledShifted)

    def test_unknown_weight(self):
        with self.assertRaises(ValueError):
            parse_weight('gamma')

    def test_orlicz_functions(self):
        self.assertEqual(parse_h('sqrt').cls, PSI)
        self.assertEqual(parse_h('power:p=2', 2).power, -1.0)
        self.assertEqual(parse_h('const:k=2,cls=Psi').cls, PSI)
        self.assertEqual(parse_h('const').cls, PHI)

    def test_power_needs_p(self):
        with self.assertRaises(ValueError):
            parse_h('power')

    def test_bad_class(self):
        with self.assertRaises(ValueError):
            parse_h('const:cls=Omega')

    def test_suggest_cutoff(self):
        self.assertEqual(suggest('squre', ['square', 'sqrt', 'inv']), 'square')
        self.assertIsNone(suggest('zzzz', ['square', 'sqrt', 'inv']))


class TestConfigFiles(unittest.TestCase):
    """Suite and job documents loaded from a temporary directory."""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        load_suite_config.cache_clear()
        load_job_config.cache_clear()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)
        load_suite_config.cache_clear()
        load_job_config.cache_clear()

    def _write(self, name, payload):
        path = os.path.join(self.tmp, name)
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(payload if isinstance(payload, str) else json.dumps(payload))
        return path

    def test_suite_config_loads(self):
        path = self._write('suite.json', {'dims': [1], 'checks': ['scaling_law'], 'grid_points': {'1': 201}})
        config = load_suite_config(path)
        self.assertEqual(config.dims, (1,))
        self.assertEqual(config.checks, ('scaling_law',))
        self.assertEqual(config.counts(1), 201)

    def test_unknown_suite_key_suggests(self):
        path = self._write('suite.json', {'dims': [1], 'checks': [], 'seeed': 3})
        with self.assertRaises(ValueError) as ctx:
            load_suite_config(path)
        self.assertIn("did you mean 'seed'", str(ctx.exception))

    def test_missing_required_field(self):
        path = self._write('suite.json', {'dims': [1]})
        with self.assertRaises(ValueError) as ctx:
            load_suite_config(path)
        self.assertIn('checks', str(ctx.exception))

    def test_unknown_tolerance_class(self):
        path = self._write('suite.json', {'dims': [1], 'checks': [], 'tolerances': {'equalty': 0.1}})
        with self.assertRaises(ValueError) as ctx:
            load_suite_config(path)
        self.assertIn('equality', str(ctx.exception))

    def test_invalid_values_wrapped(self):
        path = self._write('suite.json', {'dims': [5], 'checks': []})
        with self.assertRaises(ValueError):
            load_suite_config(path)

    def test_malformed_json(self):
        path = self._write('suite.json', '{"dims": [1],')
        with self.assertRaises(ValueError):
            load_suite_config(path)

    def test_job_config_with_components(self):
        path = self._write('job.json', {
            'dim': 1,
            'grid_points': 101,
            'components': [{'psi': 'gaussian:c=1', 'h': 'sqrt'}, {'psi': 'gaussian:c=1.2', 'h': 'sqrt', 'F2': 'exp'}],
        })
        job = load_job_config(path)
        self.assertEqual(job.components[0], Component('gaussian:c=1', 'sqrt'))
        spec = job.mixed_spec()
        self.assertEqual(spec.m, 2)
        self.assertEqual(spec.dim, 1)

    def test_component_missing_h(self):
        path = self._write('job.json', {'components': [{'psi': 'gaussian:c=1'}]})
        with self.assertRaises(ValueError):
            load_job_config(path)

    def test_mixed_spec_needs_components(self):
        with self.assertRaises(ValueError):
            JobConfig(psi='gaussian:c=1').mixed_spec()

    def test_missing_file(self):
        with self.assertRaises(ValueError):
            resolve_config_path(os.path.join(self.tmp, 'absent.json'))

    def test_bundled_configs_resolve_by_name(self):
        self.assertEqual(load_suite_config('quick').dims, (1,))
        self.assertEqual(len(load_job_config('mixed_psi_pair').components), 2)


class TestKeyHelp(unittest.TestCase):

    def test_lists_every_suite_key(self):
        text = config_key_help()
        for key in ('dims', 'checks', 'tolerances', 'components'):
            self.assertIn(key, text)


if __name__ == '__main__':
    unittest.main()
