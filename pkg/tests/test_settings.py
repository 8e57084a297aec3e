"""Tests for environment-driven settings in affine_area/settings.py."""

import importlib
import io
import os
import sys
import unittest
from unittest.mock import patch

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from affine_area import settings


class TestEnvironmentOverrides(unittest.TestCase):
    """Grid sizes and workers come from AFFINE_AREA_* variables."""

    def tearDown(self):
        importlib.reload(settings)

    def test_grid_points_override(self):
        """AFFINE_AREA_GRID_POINTS_2D replaces the 2D default."""
        with patch.dict(os.environ, {'AFFINE_AREA_GRID_POINTS_2D': '41'}):
            importlib.reload(settings)
            self.assertEqual(settings.GRID_POINTS[2], 41)
            self.assertEqual(settings.ENV_KEYS['AFFINE_AREA_GRID_POINTS_2D'], 41)

    def test_even_count_is_made_odd(self):
        """grid_points always returns an odd count so the origin is a node."""
        with patch.dict(os.environ, {'AFFINE_AREA_GRID_POINTS_1D': '100'}):
            importlib.reload(settings)
            self.assertEqual(settings.grid_points(1), 101)

    def test_blank_value_uses_default(self):
        """An empty variable falls back to the default."""
        with patch.dict(os.environ, {'AFFINE_AREA_WORKERS': ''}):
            importlib.reload(settings)
            self.assertEqual(settings.MAX_WORKERS, 4)

    def test_non_integer_rejected(self):
        """A non-integer value is a configuration error naming the variable."""
        with patch.dict(os.environ, {'AFFINE_AREA_SEED': 'abc'}):
            with self.assertRaises(ValueError) as ctx:
                importlib.reload(settings)
        self.assertIn('AFFINE_AREA_SEED', str(ctx.exception))

    def test_workers_at_least_one(self):
        """Zero workers is clamped to one."""
        with patch.dict(os.environ, {'AFFINE_AREA_WORKERS': '0'}):
            importlib.reload(settings)
            self.assertEqual(settings.MAX_WORKERS, 1)

    def test_high_dimensions_use_3d_count(self):
        with patch.dict(os.environ, {'AFFINE_AREA_GRID_POINTS_3D': '21'}):
            importlib.reload(settings)
            self.assertEqual(settings.grid_points(3), 21)
            self.assertEqual(settings.grid_points(4), 21)


class TestLogging(unittest.TestCase):
    """log writes tagged lines to stderr; debug only when verbose."""

    def test_log_goes_to_stderr(self):
        buf = io.StringIO()
        with patch.object(sys, 'stderr', buf):
            settings.log('grid', 'hello')
        self.assertEqual(buf.getvalue(), '[grid] hello\n')

    def test_debug_silent_unless_verbose(self):
        buf = io.StringIO()
        with patch.object(settings, 'VERBOSE', False), patch.object(sys, 'stderr', buf):
            settings.debug('search', 'quiet')
        self.assertEqual(buf.getvalue(), '')
        with patch.object(settings, 'VERBOSE', True), patch.object(sys, 'stderr', buf):
            settings.debug('search', 'loud')
        self.assertIn('[search] loud', buf.getvalue())


if __name__ == '__main__':
    unittest.main()
