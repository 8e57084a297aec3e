"""Tests for verdicts, suite configuration and the runner in harness.py."""

import json
import os
import sys
import unittest
from types import SimpleNamespace

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area import harness, sconcave
from affine_area.config import load_suite_config
from affine_area.funcrep import GaussianPotential, SEnvelope, auto_grid
from affine_area.harness import (
    ALL_CHECKS,
    COVERAGE,
    COVERAGE_CHECKS,
    CYCLIC_CONDITIONS,
    WEIGHT,
    TestSuiteConfig,
    VerdictReport,
    anisotropic_quadratic,
    check_af,
    check_bounds,
    check_bs,
    check_closed_forms,
    check_cyclic,
    check_gl_covariance,
    check_invariance,
    check_isoperimetric,
    check_ith,
    check_legendre,
    check_lp_isoperimetric,
    check_orlicz_santalo,
    check_partial_af,
    check_s_limit,
    check_santalo_product,
    check_sconcave_suite,
    check_scaling_law,
    check_variational,
    cyclic_instance,
    default_mixed_specs,
    reference_weight,
    run_suite,
    validate_condition,
    verdict,
)
from affine_area.orlicz_core import H_REGISTRY, PHI, power_h
from affine_area.quadrature import ExpNeg, PowerWeight


class TestVerdict(unittest.TestCase):
    """Status assignment from slack, tolerance and optimiser gap."""

    def test_inequality_pass(self):
        report = verdict('x', 1.0, 2.0, '<=', 0.01, 'scaling-law')
        self.assertEqual(report.status, 'pass')
        self.assertAlmostEqual(report.slack, 0.5)

    def test_equality_within_tolerance(self):
        self.assertEqual(verdict('x', 1.0, 1.005, '=', 0.01, 'scaling-law').status, 'pass')
        self.assertEqual(verdict('x', 1.0, 1.1, '=', 0.01, 'scaling-law').status, 'fail')

    def test_flagged_within_gap(self):
        """A shortfall covered by the search gap is flagged, not failed."""
        report = verdict('x', 1.05, 1.0, '<=', 0.01, 'scaling-law', gap=0.1)
        self.assertEqual(report.status, 'flagged')
        self.assertEqual(verdict('x', 1.05, 1.0, '<=', 0.01, 'scaling-law').status, 'fail')

    def test_reverse_inequality(self):
        self.assertEqual(verdict('x', 3.0, 2.0, '>=', 0.01, 'scaling-law').status, 'pass')
        self.assertEqual(verdict('x', 1.0, 2.0, '>=', 0.01, 'scaling-law').status, 'fail')

    def test_report_relation_always_passes(self):
        self.assertEqual(verdict('x', 5.0, 1.0, 'report', 0.01, 'inverse-santalo-report').status, 'pass')

    def test_non_finite_fails(self):
        report = verdict('x', float('nan'), 1.0, '=', 0.01, 'scaling-law')
        self.assertEqual(report.status, 'fail')
        self.assertIsNone(report.to_record()['slack'])

    def test_unknown_relation_rejected(self):
        with self.assertRaises(ValueError):
            verdict('x', 1.0, 1.0, '<', 0.01, 'scaling-law')

    def test_unknown_provenance_rejected(self):
        with self.assertRaises(ValueError):
            verdict('x', 1.0, 1.0, '=', 0.01, 'folklore')

    def test_record_runtime_only_with_timings(self):
        report = verdict('x', 1.0, 1.0, '=', 0.01, 'scaling-law').with_runtime(1.5)
        self.assertNotIn('runtime', report.to_record())
        self.assertEqual(report.to_record(timings=True)['runtime'], 1.5)


class TestSearchGap(unittest.TestCase):

    def test_converged_has_no_gap(self):
        result = SimpleNamespace(converged=True, candidates={'a': 1.0, 'b': 2.0}, value=1.0)
        self.assertEqual(harness._search_gap(result), 0.0)

    def test_unconverged_spread(self):
        result = SimpleNamespace(converged=False, candidates={'a': 1.0, 'b': 1.2, 'c': float('inf')}, value=1.0)
        self.assertAlmostEqual(harness._search_gap(result), 0.2)


class TestSuiteConfigValidation(unittest.TestCase):
    """TestSuiteConfig rejects out-of-range settings."""

    def test_defaults(self):
        config = TestSuiteConfig()
        self.assertEqual(config.checks, ALL_CHECKS)
        self.assertEqual(config.tol('scaling'), 1e-6)
        self.assertIsNone(config.counts(1))

    def test_bad_dimension(self):
        with self.assertRaises(ValueError):
            TestSuiteConfig(dims=(4,))

    def test_unknown_check(self):
        with self.assertRaises(ValueError):
            TestSuiteConfig(checks=('closed_form',))

    def test_unknown_tolerance(self):
        with self.assertRaises(ValueError):
            TestSuiteConfig(tolerances={'closeness': 0.1})

    def test_nonpositive_values(self):
        with self.assertRaises(ValueError):
            TestSuiteConfig(tolerances={'equality': 0.0})
        with self.assertRaises(ValueError):
            TestSuiteConfig(s_values=(0.0,))
        with self.assertRaises(ValueError):
            TestSuiteConfig(c_values=(-1.0,))
        with self.assertRaises(ValueError):
            TestSuiteConfig(roster_size=-1)

    def test_record_is_json(self):
        config = TestSuiteConfig(dims=[1], grid_points={'1': 101}, tolerances={'equality': 0.05})
        record = config.to_record()
        self.assertEqual(record['grid_points'], {'1': 101})
        self.assertEqual(record['tolerances']['equality'], 0.05)
        json.dumps(record)


class TestCyclicConditions(unittest.TestCase):

    def test_every_instance_validates(self):
        for tag in CYCLIC_CONDITIONS:
            h, h1 = cyclic_instance(tag, 2)
            H = validate_condition(tag, h, h1)
            self.assertTrue(np.all(np.isfinite(H(np.array([0.5, 2.0])))), msg=tag)

    def test_wrong_pair_rejected(self):
        with self.assertRaises(ValueError):
            validate_condition('a', H_REGISTRY['sqrt'](), H_REGISTRY['square']())

    def test_unknown_tag(self):
        with self.assertRaises(ValueError):
            cyclic_instance('z', 1)


class TestReferenceWeight(unittest.TestCase):

    def test_equal_logconcave_weights_kept(self):
        F, value = reference_weight(ExpNeg(), ExpNeg(), 2)
        self.assertEqual(F, ExpNeg())
        self.assertAlmostEqual(value / (2.0 * np.pi), 1.0, places=8)

    def test_power_weights_go_through_envelope(self):
        F, value = reference_weight(PowerWeight(4.0), PowerWeight(4.0), 1)
        self.assertNotEqual(F, PowerWeight(4.0))
        self.assertGreater(value, 0.0)


class TestChecks(unittest.TestCase):
    """Each check family on small one-dimensional inputs produces reports and no failures."""

    COUNTS = 401

    @classmethod
    def setUpClass(cls):
        cls.gauss = GaussianPotential(1.0, 1)
        cls.aniso = anisotropic_quadratic(1)
        cls.specs = default_mixed_specs(1, cls.COUNTS)

    def assertNoFailures(self, reports):
        self.assertTrue(reports)
        failed = [(r.check_id, r.detail) for r in reports if r.status == 'fail']
        self.assertEqual(failed, [])

    def test_scaling_law_passes(self):
        for n in (1, 2):
            reports = check_scaling_law(n)
            self.assertTrue(reports)
            self.assertTrue(all(r.status == 'pass' for r in reports), msg=[r.check_id for r in reports if r.status != 'pass'])

    def test_planar_legendre_passes(self):
        reports = check_legendre(2)
        self.assertTrue(all(r.status == 'pass' for r in reports), msg=[(r.check_id, r.lhs) for r in reports])

    def test_closed_forms(self):
        self.assertNoFailures(check_closed_forms(1, (1.0,), self.COUNTS))

    def test_variational(self):
        self.assertNoFailures(check_variational(1, (1.0, 2.0), self.COUNTS))

    def test_invariance(self):
        self.assertNoFailures(check_invariance('asp_direct', self.aniso, 2, counts=self.COUNTS, label='anisotropic'))

    def test_gl_covariance(self):
        self.assertNoFailures(check_gl_covariance(1.0, self.aniso, counts=self.COUNTS, label='anisotropic'))

    def test_bounds(self):
        self.assertNoFailures(check_bounds(self.gauss, 'gaussian', self.COUNTS))

    def test_blaschke_santalo_equality(self):
        self.assertNoFailures(check_bs(self.gauss, label='gaussian', counts=self.COUNTS, equality=True))

    def test_isoperimetric(self):
        h = power_h(1.0, 1)
        self.assertNoFailures(check_isoperimetric(h, WEIGHT, WEIGHT, self.aniso, 'anisotropic', self.COUNTS, equality=h.cls == PHI))
        self.assertNoFailures(check_lp_isoperimetric(1.0, WEIGHT, WEIGHT, self.aniso, 'anisotropic', self.COUNTS))

    def test_cyclic(self):
        h, h1 = cyclic_instance('a', 1)
        self.assertNoFailures(check_cyclic(h, h1, WEIGHT, WEIGHT, self.aniso, 'a', 'anisotropic', self.COUNTS))

    def test_santalo_products(self):
        self.assertNoFailures(check_orlicz_santalo(power_h(1.0, 1), WEIGHT, WEIGHT, self.gauss, 'gaussian', self.COUNTS))
        self.assertNoFailures(check_santalo_product(1.0, WEIGHT, WEIGHT, self.gauss, 'gaussian', self.COUNTS, equality=True))

    def test_sconcave_suite(self):
        psi = SEnvelope(0.5, 1.0, 1)
        sp = sconcave.sconcave_pair(psi, 0.5, grid=auto_grid(psi, 801))
        self.assertNoFailures(check_sconcave_suite(sp, (power_h(1.0, 1),), (1.0,), 'envelope', 801))

    def test_small_s_limit(self):
        reports = check_s_limit(1, (1.0,))
        self.assertNoFailures(reports)
        self.assertEqual({r.provenance for r in reports}, {'s-limit-consistency'})
        for report in reports:
            self.assertLess(report.detail['relative_gap'], 0.01, msg=report.check_id)

    def test_mixed_families(self):
        self.assertNoFailures(check_af(self.specs['phi-pair'], 'phi-pair'))
        self.assertNoFailures(check_partial_af(self.specs['psi-triple'], 1, 'psi-triple'))
        self.assertNoFailures(check_ith(self.specs['psi-pair'], 'psi-pair'))


class TestRunSuite(unittest.TestCase):
    """run_suite ordering, exit codes and serialisation."""

    def test_no_checks_is_empty_success(self):
        suite = run_suite(TestSuiteConfig(dims=(1,), checks=()), workers=2)
        self.assertEqual(suite.reports, ())
        self.assertEqual(suite.exit_code, 0)
        self.assertIn('0 passed', suite.to_table())

    def test_scaling_suite_is_deterministic(self):
        config = TestSuiteConfig(dims=(1,), checks=('scaling_law',))
        first = run_suite(config, workers=3)
        second = run_suite(config, workers=1)
        self.assertEqual(first.exit_code, 0)
        self.assertEqual(first.to_jsonl(), second.to_jsonl())
        lines = first.to_jsonl().splitlines()
        header = json.loads(lines[0])
        self.assertEqual(list(header['coverage']), ['scaling-law'])
        self.assertNotIn('runtime', json.loads(lines[1]))
        self.assertIn('runtime', json.loads(first.to_jsonl(timings=True).splitlines()[1]))

    def test_failed_job_becomes_report(self):
        def boom():
            raise ValueError('bad input')
        reports = harness._run_job(harness.Job('broken/n1', 'scaling-law', boom))
        self.assertEqual(len(reports), 1)
        self.assertIsInstance(reports[0], VerdictReport)
        self.assertEqual(reports[0].status, 'fail')
        self.assertIn('bad input', reports[0].detail['error'])

    def test_unexpected_exception_becomes_report(self):
        def broken():
            return len(None)
        reports = harness._run_job(harness.Job('typo/n1', 'scaling-law', broken))
        self.assertEqual([r.status for r in reports], ['fail'])
        self.assertTrue(reports[0].detail['error'].startswith('TypeError'))

    def test_header_lists_skipped_results(self):
        suite = run_suite(TestSuiteConfig(dims=(1,), checks=('scaling_law',)), workers=1)
        header = json.loads(suite.to_jsonl().splitlines()[0])
        self.assertEqual(set(header['coverage']) | set(header['skipped']), set(COVERAGE))
        self.assertNotIn('scaling-law', header['skipped'])
        self.assertIn("check legendre not selected", header['skipped']['legendre-duality'])
        self.assertIn('Skipped:  ith-interpolation', suite.to_table())

    def test_every_provenance_has_a_check(self):
        self.assertEqual(set(COVERAGE_CHECKS), set(COVERAGE))
        for checks in COVERAGE_CHECKS.values():
            self.assertTrue(set(checks) <= set(ALL_CHECKS))


class TestQuickRoster(unittest.TestCase):
    """The bundled quick roster runs clean end to end."""

    def test_no_failures(self):
        suite = run_suite(load_suite_config('quick'), workers=2)
        failed = [(r.check_id, r.detail) for r in suite.reports if r.status == 'fail']
        self.assertEqual(failed, [])
        self.assertEqual(suite.exit_code, 0)
        self.assertIn('cyclic-inequalities', suite.coverage)


if __name__ == '__main__':
    unittest.main()
