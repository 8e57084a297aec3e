"""Legendre and s-concave duals, the gradient map T_psi, the F-breve envelope and centering."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from affine_area.errors import CenteringError, EmptyRegionError, UnboundedEnvelopeError
from affine_area.funcrep import (
    FunctionRep,
    Grid,
    SampledConvex,
    SEnvelope,
    auto_grid,
    gradient,
    grid_derivatives,
    neighbour_table,
    translate,
)
from affine_area.quadrature import (
    QuadratureSample,
    Tabulated,
    WeightFunction,
    sample_regular,
    tree_sum,
)
from affine_area.search import optimize
from affine_area.settings import MAX_WORKERS, debug, grid_points, log


DUAL_PAD = 0.10
# Entries of one (dual chunk x primal nodes) score matrix
CHUNK_ENTRIES = 2_000_000
CENTER_SNAP = 1e-3
BREVE_T_RANGE = (0.0, 40.0)
BREVE_RESOLUTION = 401


# ---------------------------------------------------------------------------
# Discrete suprema
# ---------------------------------------------------------------------------

def _on_boundary(points: np.ndarray, grid: Grid) -> np.ndarray:
    tol = 1e-9 * grid.spacing
    return np.any((points <= grid.lower + tol) | (points >= grid.upper - tol), axis=1)


def _discrete_sup(
    targets: np.ndarray,
    nodes: np.ndarray,
    score: Callable[[np.ndarray, np.ndarray], np.ndarray],
    edge: np.ndarray,
    neighbours: Optional[np.ndarray] = None,
) -> np.ndarray:
    """max over nodes of score(targets_chunk, nodes) per target; +inf where the max sits on `edge`.

    Chunks run on a thread pool and are reassembled in target order; ties go to
    the first node. With a `neighbours` table (see neighbour_table) the discrete
    max is lifted to the vertex of the parabola through the winning node and its
    two axis neighbours, axis by axis, which is exact for separable quadratics.
    """
    chunk = max(1, CHUNK_ENTRIES // max(1, nodes.shape[0]))
    pieces = [targets[i:i + chunk] for i in range(0, targets.shape[0], chunk)]

    def run(piece):
        scores = score(piece, nodes)
        rows = np.arange(piece.shape[0])
        best = np.argmax(scores, axis=1)
        vals = scores[rows, best]
        if neighbours is not None:
            lift = np.zeros_like(vals)
            for axis in range(neighbours.shape[1]):
                lo, hi = neighbours[best, axis, 0], neighbours[best, axis, 1]
                both = (lo >= 0) & (hi >= 0)
                s_lo = np.where(both, scores[rows, np.maximum(lo, 0)], vals)
                s_hi = np.where(both, scores[rows, np.maximum(hi, 0)], vals)
                curv = 2.0 * vals - s_lo - s_hi
                ok = both & (curv > 0)
                lift += np.where(ok, (s_hi - s_lo) ** 2 / (8.0 * np.where(ok, curv, 1.0)), 0.0)
            vals = vals + lift
        return np.where(edge[best], np.inf, vals)

    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as pool:
        results = list(pool.map(run, pieces))
    return np.concatenate(results) if results else np.zeros(0)


def _legendre_score(values: np.ndarray):
    return lambda y, x: y @ x.T - values[None, :]


def _s_score(values: np.ndarray, s: float):
    denom = 1.0 - s * values
    return lambda y, x: (y @ x.T - values[None, :]) / denom[None, :]


def _pad_box(points: np.ndarray, dim: int, counts: Optional[int]) -> Grid:
    lower, upper = points.min(axis=0), points.max(axis=0)
    width = upper - lower
    if np.any(width <= 0):
        raise EmptyRegionError(f"Gradient range is degenerate ({lower} to {upper}); cannot size a dual grid")
    pad = DUAL_PAD * width
    count = counts if counts is not None else grid_points(dim)
    return Grid(lower - pad, upper + pad, (count,) * dim)


def _finite_gradients(psi: FunctionRep, grid: Grid) -> np.ndarray:
    vals = psi.values(grid.points)
    finite = np.isfinite(vals)
    if psi.closed_form:
        grads = psi.gradients(grid.points[finite])
    else:
        grads, _ = grid_derivatives(vals.reshape(grid.shape), grid.spacing)
        grads = grads[finite]
    grads = grads[np.all(np.isfinite(grads), axis=1)]
    if grads.size == 0:
        raise EmptyRegionError("No finite gradients to size the dual grid from")
    return grads


# ---------------------------------------------------------------------------
# Legendre duality
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DualPair:
    """psi with its Legendre transform sampled (or closed form) on dual_grid."""

    primal: FunctionRep
    dual: FunctionRep
    dual_grid: Grid
    primal_grid: Grid
    involution_error: float

    @cached_property
    def primal_sample(self) -> QuadratureSample:
        return sample_regular(self.primal, self.primal_grid)

    @cached_property
    def dual_sample(self) -> QuadratureSample:
        return sample_regular(self.dual, self.dual_grid)

    def young_violation(self, count: int = 2000, seed: int = 0) -> float:
        """Most negative psi(x) + psi*(y) - <x, y> over random finite node pairs."""
        rng = np.random.default_rng(seed)
        xs = self.primal_grid.points
        ys = self.dual_grid.points
        xv, yv = self.primal.values(xs), self.dual.values(ys)
        xs, xv = xs[np.isfinite(xv)], xv[np.isfinite(xv)]
        ys, yv = ys[np.isfinite(yv)], yv[np.isfinite(yv)]
        i = rng.integers(0, xs.shape[0], count)
        j = rng.integers(0, ys.shape[0], count)
        gap = xv[i] + yv[j] - np.einsum('mi,mi->m', xs[i], ys[j])
        return float(min(gap.min(), 0.0))


def legendre(
    psi: FunctionRep,
    dual_grid: Optional[Grid] = None,
    primal_grid: Optional[Grid] = None,
    counts: Optional[int] = None,
) -> DualPair:
    """psi*(y) = sup_x <x, y> - psi(x).

    Closed forms with a known conjugate are returned analytically; anything
    else is a direct max over the primal grid nodes, O(N*M).
    """
    primal_grid = primal_grid if primal_grid is not None else auto_grid(psi, counts)
    closed = psi.conjugate() if psi.closed_form else None
    if closed is not None:
        grid = dual_grid if dual_grid is not None else auto_grid(closed, counts)
        back = closed.conjugate()
        involution = 0.0
        if back is not None:
            pts = primal_grid.points
            fwd = psi.values(pts)
            ok = np.isfinite(fwd)
            involution = float(np.max(np.abs(back.values(pts[ok]) - fwd[ok]), initial=0.0))
        return DualPair(psi, closed, grid, primal_grid, involution)

    xs = primal_grid.points
    xv = psi.values(xs)
    finite = np.isfinite(xv)
    if not finite.any():
        raise EmptyRegionError(f"{psi.describe()} is infinite on every node of its grid")
    nodes, node_vals = xs[finite], xv[finite]
    if dual_grid is None:
        dual_grid = _pad_box(_finite_gradients(psi, primal_grid), psi.dim, counts)

    edge = _on_boundary(nodes, primal_grid)
    dual_vals = _discrete_sup(
        dual_grid.points, nodes, _legendre_score(node_vals), edge, neighbour_table(primal_grid, finite)
    )
    dual = SampledConvex(dual_grid, dual_vals.reshape(dual_grid.shape))

    # Conjugate back onto the primal nodes and compare where both are finite
    ys = dual_grid.points
    yv = dual_vals
    dual_finite = np.isfinite(yv)
    back = _discrete_sup(
        nodes, ys[dual_finite], _legendre_score(yv[dual_finite]),
        _on_boundary(ys[dual_finite], dual_grid), neighbour_table(dual_grid, dual_finite),
    )
    overlap = np.isfinite(back)
    involution = float(np.max(np.abs(back[overlap] - node_vals[overlap]), initial=np.inf if not overlap.any() else 0.0))
    debug('transforms', f"legendre: {dual_finite.sum()} finite dual nodes, involution error {involution:.3e}")
    return DualPair(psi, dual, dual_grid, primal_grid, involution)


def polar_dual(f_potential: FunctionRep, dual_grid: Optional[Grid] = None) -> FunctionRep:
    """Potential of f° = e^{-psi*} for f = e^{-psi}."""
    return legendre(f_potential, dual_grid).dual


# ---------------------------------------------------------------------------
# s-concave duality
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SDualPair:
    """psi on S_f with its s-dual and the per-node gradient-map data.

    Arrays are aligned with `sample` (regular nodes where 1 - s psi > 0).
    """

    s: float
    primal: FunctionRep
    dual: FunctionRep
    dual_grid: Grid
    primal_grid: Grid
    sample: QuadratureSample
    u_samples: np.ndarray
    psitilde_samples: np.ndarray
    tmap_samples: np.ndarray
    jacobian: np.ndarray
    flagged_points: int
    involution_error: float


def _s_region(psi: FunctionRep, s: float, grid: Grid) -> Tuple[QuadratureSample, np.ndarray, np.ndarray, np.ndarray]:
    sample = sample_regular(psi, grid)
    region = sample.region
    u = 1.0 - s * region.values
    inside = u > 0
    if not inside.any():
        raise EmptyRegionError(f"{psi.describe()} has no regular node with psi < 1/s (s={s:g})")
    sample = sample.restrict(inside)
    region = sample.region
    u = u[inside]
    psitilde = 1.0 + s * np.einsum('mi,mi->m', region.points, region.gradients) - s * region.values
    if np.any(psitilde <= 0):
        raise ValueError(
            f"1 + s<x, grad psi> - s psi <= 0 at {int((psitilde <= 0).sum())} node(s): not valid s-concave data"
        )
    return sample, u, psitilde, region.gradients / psitilde[:, None]


def s_dual(
    psi: FunctionRep,
    s: float,
    dual_grid: Optional[Grid] = None,
    primal_grid: Optional[Grid] = None,
    counts: Optional[int] = None,
) -> SDualPair:
    """psi*_(s)(y) = sup over S_f of (<x, y> - psi(x)) / (1 - s psi(x)).

    Dual values >= 1/s lie outside the dual support; they are stored as
    +inf and counted in `flagged_points`.
    """
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    primal_grid = primal_grid if primal_grid is not None else auto_grid(psi, counts)
    sample, u, psitilde, tmap = _s_region(psi, s, primal_grid)
    n = psi.dim
    jacobian = u * sample.region.hess_dets / psitilde ** (n + 1)

    closed = psi.s_conjugate(s) if psi.closed_form else None
    if closed is not None:
        grid = dual_grid if dual_grid is not None else auto_grid(closed, counts)
        back = closed.s_conjugate(s)
        involution = 0.0
        if back is not None:
            pts = sample.region.points
            involution = float(np.max(np.abs(back.values(pts) - sample.region.values), initial=0.0))
        return SDualPair(s, psi, closed, grid, primal_grid, sample, u, psitilde, tmap, jacobian, 0, involution)

    xs = primal_grid.points
    xv = psi.values(xs)
    support = np.isfinite(xv) & (1.0 - s * xv > 0)
    nodes, node_vals = xs[support], xv[support]
    if dual_grid is None:
        dual_grid = _pad_box(tmap, n, counts)
    raw = _discrete_sup(dual_grid.points, nodes, _s_score(node_vals, s), _on_boundary(nodes, primal_grid))
    outside = np.isfinite(raw) & (1.0 - s * raw <= 0)
    flagged = int(outside.sum())
    if flagged:
        debug('transforms', f"s_dual: {flagged} dual node(s) with 1 - s psi* <= 0 marked outside the support")
    dual_vals = np.where(outside, np.inf, raw)
    dual = SampledConvex(dual_grid, dual_vals.reshape(dual_grid.shape))

    ys = dual_grid.points
    keep = np.isfinite(dual_vals)
    back = _discrete_sup(
        sample.region.points, ys[keep], _s_score(dual_vals[keep], s), _on_boundary(ys[keep], dual_grid)
    )
    overlap = np.isfinite(back)
    involution = float(np.max(np.abs(back[overlap] - sample.region.values[overlap]), initial=0.0)) if overlap.any() else np.inf
    return SDualPair(s, psi, dual, dual_grid, primal_grid, sample, u, psitilde, tmap, jacobian, flagged, involution)


def t_map(pair: SDualPair, x) -> np.ndarray:
    """T_psi(x) = grad psi(x) / psi-tilde(x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    psi, s = pair.primal, pair.s
    if isinstance(psi, SEnvelope):
        if not np.isfinite(psi.values(x.reshape(1, -1))[0]):
            raise ValueError(f"Point {x.tolist()} lies outside the support of {psi.describe()}")
        return psi.c ** 2 * x
    grad = gradient(psi, x)
    value = float(psi.values(x.reshape(1, -1))[0])
    psitilde = 1.0 + s * float(x @ grad) - s * value
    if psitilde <= 0:
        raise ValueError(f"1 + s<x, grad psi> - s psi = {psitilde:.3e} <= 0 at {x.tolist()}: invalid s-concave data")
    return grad / psitilde


# ---------------------------------------------------------------------------
# F-breve envelope
# ---------------------------------------------------------------------------

def _log_weight(F: WeightFunction, t: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore', over='ignore'):
        return np.log(F(t))


def _breve_coarse(F1, F2, ts, half_width, m_steps=48, u_steps=97):
    m_off = np.linspace(0.0, half_width, m_steps)
    u_off = np.linspace(-half_width, half_width, u_steps)
    m = ts[:, None, None] + m_off[None, :, None]
    u = u_off[None, None, :]
    score = 0.5 * (_log_weight(F1, m + u) + _log_weight(F2, m - u))
    flat = score.reshape(ts.size, -1)
    best = np.argmax(flat, axis=1)
    k, j = np.unravel_index(best, (m_steps, u_steps))
    return flat[np.arange(ts.size), best], m_off[k], u_off[j], m_off[1] - m_off[0], u_off[1] - u_off[0]


def breve(
    F1: WeightFunction,
    F2: WeightFunction,
    t_range: Tuple[float, float] = BREVE_T_RANGE,
    resolution: int = BREVE_RESOLUTION,
) -> Tabulated:
    """F-breve(t) = sup over (t1 + t2)/2 >= t of sqrt(F1(t1) F2(t2)), tabulated and non-increasing."""
    t_lo, t_hi = float(t_range[0]), float(t_range[1])
    if t_hi <= t_lo:
        raise ValueError(f"Envelope range must be increasing, got {t_range}")
    ts = np.linspace(t_lo, t_hi, resolution)
    half_width = max(20.0, t_hi - t_lo)

    log_val, m_best, u_best, dm, du = _breve_coarse(F1, F2, ts, half_width)
    wider, *_ = _breve_coarse(F1, F2, ts, 2.0 * half_width, m_steps=96, u_steps=193)
    if not np.all(np.isfinite(log_val)):
        raise ValueError("F1 and F2 must be positive on the envelope window")
    grow = wider - log_val
    if np.any(grow > 1e-6 * np.maximum(1.0, np.abs(log_val))):
        raise UnboundedEnvelopeError(
            f"sup of sqrt(F1 F2) keeps growing with the search window ({F1.describe()}, {F2.describe()})"
        )

    # Local refinement: finer box around the coarse optimum, then a bounded 1-D search in u
    refined = np.empty_like(log_val)
    for i, t in enumerate(ts):
        m_loc = np.clip(m_best[i] + np.linspace(-dm, dm, 17), 0.0, None) + t
        u_loc = u_best[i] + np.linspace(-du, du, 17)
        grid = 0.5 * (_log_weight(F1, m_loc[:, None] + u_loc[None, :]) + _log_weight(F2, m_loc[:, None] - u_loc[None, :]))
        k, j = np.unravel_index(np.argmax(grid), grid.shape)
        m_star = m_loc[k]
        res = minimize_scalar(
            lambda u: -0.5 * float(_log_weight(F1, np.array(m_star + u)) + _log_weight(F2, np.array(m_star - u))),
            bounds=(u_loc[0], u_loc[-1]), method='bounded', options={'xatol': 1e-10},
        )
        refined[i] = max(log_val[i], grid[k, j], -res.fun)

    vals = np.exp(refined)
    vals = np.maximum.accumulate(vals[::-1])[::-1]
    return Tabulated(ts, vals)


# ---------------------------------------------------------------------------
# Santalo-point centering
# ---------------------------------------------------------------------------

def _snap(z: np.ndarray) -> np.ndarray:
    return np.zeros_like(z) if np.linalg.norm(z) < CENTER_SNAP else z


def santalo_center(
    psi: FunctionRep,
    F1: WeightFunction,
    F2: WeightFunction,
    grid: Optional[Grid] = None,
) -> Tuple[np.ndarray, FunctionRep]:
    """z0 minimising I(F2 o psi_z*, psi_z*) over translations psi_z(x) = psi(x + z).

    The dual integral is evaluated by pushforward on a fixed sample of psi:
    psi_z*(grad psi(x)) = <x - z, grad psi(x)> - psi(x). The primal factor
    I(F1 o psi_z, psi_z) does not depend on z.
    """
    sample = sample_regular(psi, grid)
    region = sample.region
    weights = region.hess_dets * sample.cell_volume
    dots = np.einsum('mi,mi->m', region.points, region.gradients) - region.values

    def objective(z):
        with np.errstate(over='ignore', invalid='ignore'):
            vals = F2(dots - region.gradients @ z) * weights
        return tree_sum(vals) if np.all(np.isfinite(vals)) else np.inf

    result = optimize(objective, [np.zeros(psi.dim)], sense='min', label='santalo_center')
    if not np.isfinite(result.value):
        raise CenteringError(f"Centering objective is infinite for {psi.describe()} (non-coercive input)")
    if not result.converged and result.value >= objective(np.zeros(psi.dim)):
        raise CenteringError(f"Centering search for {psi.describe()} did not improve on z = 0")
    z0 = _snap(result.params)
    log('transforms', f"santalo_center: z0 = {np.round(z0, 6).tolist()}")
    return z0, (psi if not np.any(z0) else translate(psi, z0))


def s_santalo_center(psi: FunctionRep, s: float, grid: Optional[Grid] = None) -> Tuple[np.ndarray, FunctionRep]:
    """z0 minimising I((f_z)°_(s)) for the s-concave f_z = (1 - s psi(. + z))^{1/s}."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    primal_grid = grid if grid is not None else auto_grid(psi)
    sample, u, _, _ = _s_region(psi, s, primal_grid)
    region = sample.region
    n = psi.dim
    weights = u * region.hess_dets * sample.cell_volume
    base = 1.0 + s * np.einsum('mi,mi->m', region.points, region.gradients) - s * region.values

    def objective(z):
        if not s * float(psi.values(z.reshape(1, -1))[0]) < 1.0:
            return np.inf
        psitilde = base - s * (region.gradients @ z)
        if np.any(psitilde <= 0):
            return np.inf
        return tree_sum(psitilde ** (-1.0 / s - n - 1.0) * weights)

    result = optimize(objective, [np.zeros(n)], sense='min', step=0.05, label='s_santalo_center')
    if not np.isfinite(result.value):
        raise CenteringError(f"s-centering objective is infinite for {psi.describe()}")
    z0 = _snap(result.params)
    log('transforms', f"s_santalo_center: z0 = {np.round(z0, 6).tolist()}")
    return z0, (psi if not np.any(z0) else translate(psi, z0))
