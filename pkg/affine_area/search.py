"""Derivative-free simplex search with restarts, shared by centering and the variational problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import minimize

from affine_area.settings import MAX_ITER_FACTOR, debug


SIMPLEX_STEP = 0.25
FATOL = 1e-6
XATOL = 1e-4


@dataclass(frozen=True)
class SearchResult:
    """Best point found over all seeds plus the final restart."""

    params: np.ndarray
    value: float
    iterations: int
    evaluations: int
    converged: bool


def initial_simplex(seed: np.ndarray, step: float = SIMPLEX_STEP) -> np.ndarray:
    """Seed plus one vertex per axis, offset by `step`."""
    dim = seed.size
    simplex = np.tile(seed, (dim + 1, 1))
    simplex[1:] += step * np.eye(dim)
    return simplex


def optimize(
    objective: Callable[[np.ndarray], float],
    seeds: Iterable[np.ndarray],
    sense: str = 'min',
    max_iter: Optional[int] = None,
    step: float = SIMPLEX_STEP,
    label: str = 'search',
) -> SearchResult:
    """Nelder-Mead from every seed, then one restart from the best point.

    The objective is divided by |objective(first seed)| so the absolute
    tolerances act as relative ones. Non-finite values count as worst.
    """
    if sense not in ('min', 'max'):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    seeds = [np.atleast_1d(np.asarray(s, dtype=float)).ravel() for s in seeds]
    if not seeds:
        raise ValueError(f"{label}: at least one seed is required")
    dim = seeds[0].size
    sign = 1.0 if sense == 'min' else -1.0

    if dim == 0:
        value = float(objective(seeds[0]))
        return SearchResult(seeds[0], value, 0, 1, bool(np.isfinite(value)))

    first = float(objective(seeds[0]))
    scale = abs(first) if np.isfinite(first) and first != 0 else 1.0
    counter = {'evals': 1}

    def scaled(x):
        counter['evals'] += 1
        val = float(objective(x))
        return sign * val / scale if np.isfinite(val) else np.inf

    cap = max_iter if max_iter is not None else MAX_ITER_FACTOR * dim
    options = {'maxiter': cap, 'maxfev': 4 * cap, 'xatol': XATOL, 'fatol': FATOL}

    best, iterations = None, 0
    for k, seed in enumerate(seeds):
        res = minimize(scaled, seed, method='Nelder-Mead', options={**options, 'initial_simplex': initial_simplex(seed, step)})
        iterations += int(res.nit)
        debug(label, f"seed {k}: value {sign * res.fun * scale:.8g} after {res.nit} iterations")
        if best is None or res.fun < best.fun:
            best = res

    restart = minimize(
        scaled, best.x, method='Nelder-Mead',
        options={**options, 'initial_simplex': initial_simplex(best.x, step / 4)},
    )
    iterations += int(restart.nit)
    if restart.fun <= best.fun:
        best = restart

    params = np.asarray(best.x, dtype=float)
    value = float(objective(params))
    return SearchResult(params, value, iterations, counter['evals'], bool(best.success and np.isfinite(value)))
