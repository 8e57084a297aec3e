"""Mixed Orlicz affine / geominimal surface areas of several convex functions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from affine_area.errors import EmptyRegionError
from affine_area.funcrep import FunctionRep, Grid, auto_grid, compose_linear
from affine_area.orlicz_core import (
    PHI,
    TINY,
    CandidateFamily,
    FunctionalSample,
    OrliczFunction,
    VariationalResult,
    default_families,
    family_chart,
    functional_sample,
    gaussian_target,
)
from affine_area.quadrature import WeightFunction
from affine_area.search import optimize
from affine_area.settings import debug, log


Logs = Tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class MixedSpec:
    """Components (psi_i, h_i, F1_i, F2_i) sampled on one common grid."""

    psis: Tuple[FunctionRep, ...]
    hs: Tuple[OrliczFunction, ...]
    F1s: Tuple[WeightFunction, ...]
    F2s: Tuple[WeightFunction, ...]
    grid: Optional[Grid] = None

    def __post_init__(self):
        for name in ('psis', 'hs', 'F1s', 'F2s'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        m = len(self.psis)
        if m == 0:
            raise ValueError("A mixed quantity needs at least one component")
        for name in ('hs', 'F1s', 'F2s'):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries for {m} functions")
        dims = {psi.dim for psi in self.psis}
        if len(dims) != 1:
            raise ValueError(f"All functions must share one dimension, got {sorted(dims)}")
        classes = {h.cls for h in self.hs}
        if len(classes) != 1:
            raise ValueError(f"Orlicz functions must all lie in Phi or all in Psi, got {[h.name for h in self.hs]}")
        if self.grid is None:
            object.__setattr__(self, 'grid', common_grid(self.psis))

    @property
    def m(self) -> int:
        return len(self.psis)

    @property
    def dim(self) -> int:
        return self.psis[0].dim

    @property
    def cls(self) -> str:
        return self.hs[0].cls

    @property
    def sense(self) -> str:
        return 'min' if self.cls == PHI else 'max'

    @cached_property
    def full(self) -> Tuple[FunctionalSample, ...]:
        """Each component on its own regular set (normalisation integrals)."""
        return tuple(functional_sample(psi, F1, F2, self.grid) for psi, F1, F2 in zip(self.psis, self.F1s, self.F2s))

    @cached_property
    def masks(self) -> Tuple[np.ndarray, ...]:
        common = self.full[0].quad.region.indices
        for sample in self.full[1:]:
            common = np.intersect1d(common, sample.quad.region.indices, assume_unique=True)
        if common.size == 0:
            raise EmptyRegionError("The regular sets of the components do not intersect on the common grid")
        return tuple(np.isin(sample.quad.region.indices, common) for sample in self.full)

    @cached_property
    def common(self) -> Tuple[FunctionalSample, ...]:
        """Each component restricted to the intersection of the regular sets, in grid order."""
        return tuple(sample.restrict(mask) for sample, mask in zip(self.full, self.masks))

    def component(self, k: int) -> 'MixedSpec':
        return MixedSpec((self.psis[k],), (self.hs[k],), (self.F1s[k],), (self.F2s[k],), self.grid)

    def pick(self, order: Sequence[int]) -> 'MixedSpec':
        """Components in `order` (repeats allowed) on the same grid."""
        return MixedSpec(
            tuple(self.psis[k] for k in order), tuple(self.hs[k] for k in order),
            tuple(self.F1s[k] for k in order), tuple(self.F2s[k] for k in order), self.grid,
        )

    def compose(self, T: np.ndarray, grid: Optional[Grid] = None) -> 'MixedSpec':
        return MixedSpec(tuple(compose_linear(psi, T) for psi in self.psis), self.hs, self.F1s, self.F2s, grid)


def common_grid(psis: Sequence[FunctionRep], counts: Optional[int] = None) -> Grid:
    """Auto grid over the intersection of the natural boxes."""
    grids = [auto_grid(psi, counts) for psi in psis]
    lower = np.max([g.lower for g in grids], axis=0)
    upper = np.min([g.upper for g in grids], axis=0)
    if np.any(lower >= upper):
        raise EmptyRegionError(f"Natural boxes of the components do not overlap ({lower} / {upper})")
    return Grid(lower, upper, grids[0].counts)


@dataclass(frozen=True, eq=False)
class MixedResult:
    """VariationalResult plus the optimal log g of each component on its full sample."""

    result: VariationalResult
    logs: Logs

    @property
    def value(self) -> float:
        return self.result.value

    def to_record(self) -> dict:
        return self.result.to_record()


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------

def _factors(spec: MixedSpec, g_full: Sequence[np.ndarray]) -> List[np.ndarray]:
    out = []
    for k, (g, sample, mask) in enumerate(zip(g_full, spec.common, spec.masks)):
        ratio = np.maximum(g[mask], TINY) / np.maximum(sample.f2, TINY)
        out.append(np.maximum(np.asarray(spec.hs[k](ratio), dtype=float) * sample.f1, TINY))
    return out


def _weighted(spec: MixedSpec, g_full: Sequence[np.ndarray], exponents: Sequence[float]) -> float:
    log_integrand = np.zeros(len(spec.common[0]))
    for e, factor in zip(exponents, _factors(spec, g_full)):
        if e != 0:
            log_integrand += e * np.log(factor)
    return spec.common[0].quad.total(np.exp(log_integrand), label='mixed V').value


def _g_values(g, sample: FunctionalSample) -> np.ndarray:
    vals = np.asarray(g(sample.y), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("g must be finite and positive on grad psi(X_psi)")
    return vals


def mixed_v(spec: MixedSpec, gs: Sequence[Callable]) -> float:
    """int over the common domain of prod_i [h_i(g_i(grad psi_i)/F2_i(psi_i*)) F1_i(psi_i)]^{1/m}."""
    if len(gs) != spec.m:
        raise ValueError(f"Expected {spec.m} test functions, got {len(gs)}")
    g_full = [_g_values(g, sample) for g, sample in zip(gs, spec.full)]
    return _weighted(spec, g_full, [1.0 / spec.m] * spec.m)


def _ith_exponents(spec: MixedSpec, i: int) -> Tuple[float, float]:
    n = spec.dim
    if spec.m != 2:
        raise ValueError(f"i-th mixed quantities take exactly two functions, got {spec.m}")
    if not 0 <= i <= n:
        raise ValueError(f"i must lie in 0..{n}, got {i}")
    return (n - i) / n, i / n


def ith_mixed_v(spec: MixedSpec, i: int, gs: Sequence[Callable]) -> float:
    """Two-function integral with exponents (n-i)/n and i/n."""
    exps = _ith_exponents(spec, i)
    g_full = [_g_values(g, sample) for g, sample in zip(gs, spec.full)]
    return _weighted(spec, g_full, exps)


# ---------------------------------------------------------------------------
# Joint optimisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointChart:
    name: str
    sizes: Tuple[int, ...]
    parts: Tuple[Callable[[np.ndarray], np.ndarray], ...]
    seeds: Tuple[np.ndarray, ...]

    def logs(self, theta: np.ndarray) -> Logs:
        out, start = [], 0
        for size, part in zip(self.sizes, self.parts):
            out.append(part(theta[start:start + size]))
            start += size
        return tuple(out)


def joint_charts(spec: MixedSpec, families: Sequence[CandidateFamily], logconcave_only: bool) -> List[JointChart]:
    """One chart per family kind, the same kind used for every component."""
    charts = []
    for family in families:
        if logconcave_only and family.kind == 'perturbation':
            raise ValueError("A log-concave-only problem cannot use the perturbation family")
        per = [family_chart(family, sample) for sample in spec.full]
        if logconcave_only and not all(c.logconcave for c in per):
            debug('mixed', f"skipping joint {family.kind}: some component is not log-concave")
            continue
        count = max(len(c.seeds) for c in per)
        seeds = tuple(np.concatenate([c.seeds[j % len(c.seeds)] for c in per]) for j in range(count))
        charts.append(JointChart(per[0].name, tuple(c.size for c in per), tuple(c.log_g for c in per), seeds))
    return charts


def _joint_objective(spec: MixedSpec, exponents: Sequence[float], target: float, label: str = 'mixed'):
    def objective(logs: Logs) -> float:
        g_full = []
        for log_g, sample in zip(logs, spec.full):
            g = np.exp(log_g - np.max(log_g))
            Ig = sample.dual_integral(g)
            if not np.isfinite(Ig) or Ig <= 0:
                return np.nan
            g_full.append(target * g / Ig)
        try:
            return _weighted(spec, g_full, exponents)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            debug('mixed', f"{label}: candidate rejected, {type(exc).__name__}: {exc}")
            return np.nan
    return objective


def _run_joint(
    spec: MixedSpec, exponents: Sequence[float], families: Optional[Sequence[CandidateFamily]],
    logconcave_only: bool, extras: Sequence[Tuple[str, Logs]], label: str,
) -> MixedResult:
    families = families if families is not None else default_families(logconcave_only)
    target = next((f.target for f in families if f.target is not None), gaussian_target(spec.dim))
    objective = _joint_objective(spec, exponents, target, label)
    sense = spec.sense
    candidates = {}
    best_value, best_params, best_logs = np.nan, {'family': None, 'params': []}, None
    iterations, converged = 0, True

    def consider(name, params, logs, value):
        nonlocal best_value, best_params, best_logs
        candidates[name] = float(value)
        if not np.isfinite(value):
            return
        if not np.isfinite(best_value) or (value < best_value if sense == 'min' else value > best_value):
            best_value, best_params, best_logs = float(value), {'family': name, 'params': [float(v) for v in params]}, logs

    for chart in joint_charts(spec, families, logconcave_only):
        if sum(chart.sizes) == 0:
            logs = chart.logs(np.zeros(0))
            consider(chart.name, [], logs, objective(logs))
            continue
        found = optimize(lambda theta, c=chart: objective(c.logs(theta)), chart.seeds, sense=sense, label=f"{label}/{chart.name}")
        iterations += found.iterations
        converged &= found.converged
        consider(chart.name, found.params, chart.logs(found.params), found.value)
    for name, logs in extras:
        if len(logs) != spec.m:
            raise ValueError(f"Extra candidate {name!r} has {len(logs)} components for {spec.m} functions")
        consider(name, [], tuple(logs), objective(tuple(logs)))

    if best_logs is None:
        raise ValueError(f"{label}: no candidate produced a finite objective")
    if not converged:
        log(label, 'simplex search hit its iteration cap; best value returned, flagged unconverged')
    debug(label, f"best {best_params['family']} = {best_value:.8g}")
    result = VariationalResult(best_value, best_params, iterations, converged=converged, candidates=candidates)
    return MixedResult(result, best_logs)


def mixed_orlicz_as(
    spec: MixedSpec, families: Optional[Sequence[CandidateFamily]] = None, extras: Sequence[Tuple[str, Logs]] = (),
) -> MixedResult:
    """inf (Phi^m) / sup (Psi^m) of mixed_v over g_i with I(g_i, psi_i*) = (sqrt(2 pi))^n each.

    `extras` are fixed candidates given as per-component log g on the full samples.
    """
    return _run_joint(spec, [1.0 / spec.m] * spec.m, families, False, extras, 'mixed_orlicz_as')


def mixed_orlicz_gm(
    spec: MixedSpec, families: Optional[Sequence[CandidateFamily]] = None, extras: Sequence[Tuple[str, Logs]] = (),
) -> MixedResult:
    return _run_joint(spec, [1.0 / spec.m] * spec.m, families, True, extras, 'mixed_orlicz_gm')


def ith_mixed_as(
    spec: MixedSpec, i: int, families: Optional[Sequence[CandidateFamily]] = None, extras: Sequence[Tuple[str, Logs]] = (),
) -> MixedResult:
    """i-th mixed Orlicz affine surface area; both g_i normalised to (sqrt(2 pi))^n."""
    return _run_joint(spec, _ith_exponents(spec, i), families, False, extras, f"ith_mixed_as[{i}]")


def ith_mixed_gm(
    spec: MixedSpec, i: int, families: Optional[Sequence[CandidateFamily]] = None, extras: Sequence[Tuple[str, Logs]] = (),
) -> MixedResult:
    return _run_joint(spec, _ith_exponents(spec, i), families, True, extras, f"ith_mixed_gm[{i}]")
