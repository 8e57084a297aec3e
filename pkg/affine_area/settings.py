"""Runtime settings read from the environment, `.env` and `env.local`."""

from __future__ import annotations

import os
import sys

from dotenv import load_dotenv

load_dotenv()
load_dotenv('env.local')


def _int_env(key: str, default: int) -> int:
    raw = os.environ.get(key)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"Environment variable {key} must be an integer, got {raw!r}") from exc


# Samples per axis for auto-sized grids, by dimension
GRID_POINTS = {
    1: _int_env('AFFINE_AREA_GRID_POINTS_1D', 801),
    2: _int_env('AFFINE_AREA_GRID_POINTS_2D', 101),
    3: _int_env('AFFINE_AREA_GRID_POINTS_3D', 31),
}

MAX_WORKERS = max(1, _int_env('AFFINE_AREA_WORKERS', 4))
DEFAULT_SEED = _int_env('AFFINE_AREA_SEED', 20240607)
VERBOSE = _int_env('AFFINE_AREA_VERBOSE', 0) > 0

# Nelder-Mead iteration cap is this factor times the parameter count
MAX_ITER_FACTOR = max(1, _int_env('AFFINE_AREA_MAX_ITER_FACTOR', 200))

CONFIG_DIR = os.environ.get('AFFINE_AREA_CONFIG_DIR') or os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')

ENV_KEYS = {
    'AFFINE_AREA_GRID_POINTS_1D': GRID_POINTS[1],
    'AFFINE_AREA_GRID_POINTS_2D': GRID_POINTS[2],
    'AFFINE_AREA_GRID_POINTS_3D': GRID_POINTS[3],
    'AFFINE_AREA_WORKERS': MAX_WORKERS,
    'AFFINE_AREA_SEED': DEFAULT_SEED,
    'AFFINE_AREA_VERBOSE': int(VERBOSE),
    'AFFINE_AREA_MAX_ITER_FACTOR': MAX_ITER_FACTOR,
    'AFFINE_AREA_CONFIG_DIR': CONFIG_DIR,
}


def grid_points(dim: int) -> int:
    """Odd per-axis sample count for an auto-sized grid in `dim` dimensions."""
    count = GRID_POINTS.get(dim, GRID_POINTS[3])
    return count if count % 2 == 1 else count + 1


def log(tag: str, msg: str) -> None:
    # stderr keeps stdout clean for JSON / CSV output
    print(f"[{tag}] {msg}", file=sys.stderr)
    sys.stderr.flush()


def debug(tag: str, msg: str) -> None:
    if VERBOSE:
        log(tag, msg)
