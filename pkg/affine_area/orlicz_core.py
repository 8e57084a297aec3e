"""Orlicz mixed integrals and the Orlicz / L_p affine and geominimal surface areas of log-concave functions.

Every functional here is a quadrature over the regular set X_psi, with test
functions g evaluated at the dual points y = grad psi(x). The variational
quantities optimise over finite-dimensional candidate families; for inf
problems the reported value is the best candidate found, so it is an upper
bound on the true infimum (a lower bound for sup problems).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from affine_area.funcrep import FunctionRep, Grid
from affine_area.quadrature import (
    IntegralResult,
    QuadratureSample,
    WeightFunction,
    radial_integral,
    sample_regular,
    tree_sum,
)
from affine_area.search import optimize
from affine_area.settings import debug, log
from affine_area.transforms import legendre


PHI = 'Phi'
PSI = 'Psi'
TINY = 1e-300
# Log-spaced points for shape validation of h
SHAPE_POINTS = np.logspace(-3, 3, 64)
SHAPE_TOL = 1e-10


# ---------------------------------------------------------------------------
# Orlicz functions h
# ---------------------------------------------------------------------------

def _shape(values: np.ndarray, ts: np.ndarray = SHAPE_POINTS) -> Dict[str, bool]:
    scale = max(1.0, float(np.max(np.abs(values))))
    diffs = np.diff(values)
    slopes = diffs / np.diff(ts)
    curv = np.diff(slopes)
    flat = float(np.max(values) - np.min(values)) <= SHAPE_TOL * scale
    return {
        'constant': flat,
        'increasing': bool(np.all(diffs > 0)),
        'decreasing': bool(np.all(diffs < 0)),
        'convex': bool(np.all(curv > -SHAPE_TOL * scale)) and not flat,
        'concave': bool(np.all(curv < SHAPE_TOL * scale)) and not flat,
    }


def shape_of(fn: Callable[[np.ndarray], np.ndarray], ts: np.ndarray = SHAPE_POINTS) -> Dict[str, bool]:
    """Monotonicity / convexity flags of a scalar map sampled on `ts`."""
    return _shape(np.asarray(fn(ts), dtype=float), ts)


@dataclass(frozen=True, eq=False)
class OrliczFunction:
    """h: (0, inf) -> (0, inf) tagged with its class (Phi: convex, Psi: increasing concave)."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    cls: str
    power: Optional[float] = None
    monotonicity: str = field(init=False)
    submultiplicative: bool = field(init=False)

    def __post_init__(self):
        if self.cls not in (PHI, PSI):
            raise ValueError(f"Orlicz class must be {PHI!r} or {PSI!r}, got {self.cls!r}")
        values = np.asarray(self.fn(SHAPE_POINTS), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError(f"h={self.name} must be finite and positive on (0, inf)")
        shape = _shape(values)
        if not shape['constant']:
            if self.cls == PHI and not shape['convex']:
                raise ValueError(f"h={self.name} is neither constant nor strictly convex, so it is not in {PHI}")
            if self.cls == PSI and not (shape['increasing'] and shape['concave']):
                raise ValueError(f"h={self.name} is neither constant nor increasing concave, so it is not in {PSI}")
        if shape['constant']:
            mono = 'constant'
        elif shape['increasing']:
            mono = 'increasing'
        elif shape['decreasing']:
            mono = 'decreasing'
        else:
            mono = 'non-monotone'
        object.__setattr__(self, 'monotonicity', mono)

        # h(t)h(s) <= h(r)^2 for st >= r^2: h non-increasing and log h(e^x) midpoint convex
        log_h = np.log(values)
        mid = np.log(np.asarray(self.fn(np.sqrt(SHAPE_POINTS[:-2] * SHAPE_POINTS[2:])), dtype=float))
        midpoint = bool(np.all(log_h[:-2] + log_h[2:] <= 2 * mid + SHAPE_TOL * max(1.0, np.max(np.abs(log_h)))))
        object.__setattr__(self, 'submultiplicative', mono in ('constant', 'decreasing') and midpoint)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError(f"h={self.name} evaluated at a nonpositive argument")
        return np.asarray(self.fn(t), dtype=float)

    @property
    def is_constant(self) -> bool:
        return self.monotonicity == 'constant'

    def inverse(self, y: float) -> float:
        """t with h(t) = y; powers invert analytically, anything else by brentq."""
        if self.monotonicity not in ('increasing', 'decreasing'):
            raise ValueError(f"h={self.name} is not strictly monotone and cannot be inverted")
        if self.power is not None:
            return float(y) ** (1.0 / self.power)
        ts = np.logspace(-12, 12, 241)
        gap = self(ts) - y
        change = np.flatnonzero(np.sign(gap[:-1]) != np.sign(gap[1:]))
        if change.size == 0:
            raise ValueError(f"h={self.name} does not reach {y:g} on [1e-12, 1e12]")
        k = change[0]
        return float(brentq(lambda t: float(self(np.array(t))) - y, ts[k], ts[k + 1], xtol=1e-14, rtol=1e-13))

    def describe(self) -> str:
        return self.name


def power_h(p: float, n: int) -> OrliczFunction:
    """h(t) = t^{-p/n}: Phi for p > 0 or p < -n, Psi for -n < p < 0."""
    if p == -n:
        raise ValueError("p = -n is excluded")
    q = -p / n
    if q == 1.0:
        raise ValueError("h(t) = t is linear: neither strictly convex nor strictly concave")
    cls = PSI if 0.0 < q < 1.0 else PHI
    return OrliczFunction(f"t^{q:g}", lambda t, q=q: np.power(t, q), cls, power=q)


def constant_h(k: float = 1.0, cls: str = PHI) -> OrliczFunction:
    if k <= 0:
        raise ValueError(f"Constant h must be positive, got {k}")
    return OrliczFunction(f"const{k:g}", lambda t, k=k: np.full_like(np.asarray(t, dtype=float), k), cls, power=None)


def orlicz_from(name: str, fn: Callable[[np.ndarray], np.ndarray], cls: str, power: Optional[float] = None) -> OrliczFunction:
    return OrliczFunction(name, fn, cls, power)


H_REGISTRY: Dict[str, Callable[..., OrliczFunction]] = {
    'power': lambda p, n: power_h(float(p), int(n)),
    'const': lambda k=1.0, cls=PHI: constant_h(float(k), cls),
    'sqrt': lambda: OrliczFunction('sqrt', np.sqrt, PSI, power=0.5),
    'square': lambda: OrliczFunction('square', np.square, PHI, power=2.0),
    'inv': lambda: OrliczFunction('inv', lambda t: 1.0 / t, PHI, power=-1.0),
    'log1p': lambda: OrliczFunction('log1p', np.log1p, PSI),
    'inv1p': lambda: OrliczFunction('inv1p', lambda t: 1.0 / (1.0 + t), PHI),
}


def composed_with_inverse(h: OrliczFunction, h1: OrliczFunction) -> Callable[[np.ndarray], np.ndarray]:
    """H = h o h1^{-1}, vectorised."""
    def H(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([float(h(np.array(h1.inverse(v)))) for v in t])
    return H


# ---------------------------------------------------------------------------
# Samples and candidate families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """Regular-set nodes of psi with F1(psi) and F2(psi*(grad psi)) cached."""

    psi: FunctionRep
    F1: WeightFunction
    F2: WeightFunction
    quad: QuadratureSample

    @property
    def dim(self) -> int:
        return self.psi.dim

    def __len__(self) -> int:
        return len(self.quad)

    @cached_property
    def y(self) -> np.ndarray:
        return self.quad.region.gradients

    @cached_property
    def det(self) -> np.ndarray:
        return self.quad.region.hess_dets

    @cached_property
    def f1(self) -> np.ndarray:
        return np.asarray(self.F1(self.quad.region.values), dtype=float)

    @cached_property
    def dual_values(self) -> np.ndarray:
        """psi*(grad psi(x)) = <x, grad psi(x)> - psi(x)."""
        region = self.quad.region
        return np.einsum('mi,mi->m', region.points, region.gradients) - region.values

    @cached_property
    def f2(self) -> np.ndarray:
        return np.asarray(self.F2(self.dual_values), dtype=float)

    @cached_property
    def i1(self) -> IntegralResult:
        return self.quad.total(self.f1, label='I(F1 o psi)')

    @cached_property
    def i2(self) -> IntegralResult:
        return self.quad.total(self.f2 * self.det, label='I(F2 o psi*)')

    def integral(self, values: np.ndarray) -> float:
        return tree_sum(values) * self.quad.cell_volume

    def dual_integral(self, g_values: np.ndarray) -> float:
        """I(g, psi*) by pushforward."""
        return self.integral(g_values * self.det)

    def restrict(self, keep: np.ndarray) -> 'FunctionalSample':
        return FunctionalSample(self.psi, self.F1, self.F2, self.quad.restrict(keep))


def functional_sample(psi: FunctionRep, F1: WeightFunction, F2: WeightFunction, grid: Optional[Grid] = None) -> FunctionalSample:
    sample = FunctionalSample(psi, F1, F2, sample_regular(psi, grid))
    if np.any(sample.f1 <= 0) or np.any(sample.f2 < 0):
        raise ValueError("F1 and F2 must be positive on the regular set")
    return sample


FAMILY_KINDS = ('base', 'gaussian', 'perturbation')


@dataclass(frozen=True)
class CandidateFamily:
    """Parametric test functions g > 0; each g is rescaled to `target` before h is applied."""

    kind: str
    target: Optional[float] = None
    logconcave_only: bool = False

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"Unknown candidate family {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.logconcave_only and self.kind == 'perturbation':
            raise ValueError("Perturbation candidates are not log-concave")


@dataclass(frozen=True, eq=False)
class Chart:
    """Parameter vector -> log g on the sample's dual points."""

    name: str
    size: int
    log_g: Callable[[np.ndarray], np.ndarray]
    seeds: Tuple[np.ndarray, ...]
    logconcave: bool


def gaussian_layout(n: int) -> Tuple[int, np.ndarray]:
    rows, cols = np.tril_indices(n, -1)
    return n + rows.size + n, np.stack([rows, cols])


def gaussian_log(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log g(y) = -<B(y - mu), y - mu>/2 with B = L L^t, diag(L) = exp(theta[:n])."""
    n = y.shape[1]
    size, (rows, cols) = gaussian_layout(n)
    L = np.diag(np.exp(theta[:n]))
    L[rows, cols] = theta[n:n + rows.size]
    mu = theta[n + rows.size:]
    return -0.5 * np.sum(((y - mu) @ L) ** 2, axis=1)


def gaussian_theta(B: np.ndarray, mu: np.ndarray) -> np.ndarray:
    n = mu.size
    L = np.linalg.cholesky(B)
    rows, cols = np.tril_indices(n, -1)
    return np.concatenate([np.log(np.diag(L)), L[rows, cols], mu])


def _matched_gaussian(y: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w = weights / weights.sum()
    mu = w @ y
    d = y - mu
    cov = (d * w[:, None]).T @ d
    cov += 1e-12 * np.trace(cov) * np.eye(y.shape[1])
    return np.linalg.inv(cov), mu


def gaussian_seeds(y: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Identity, base-matched moments, and a wide (B/4) version of the latter."""
    n = y.shape[1]
    identity = gaussian_theta(np.eye(n), np.zeros(n))
    B, mu = _matched_gaussian(y, weights)
    matched = gaussian_theta(0.5 * (B + B.T), mu)
    wide = matched.copy()
    wide[:n] -= np.log(2.0)
    wide[n:n + n * (n - 1) // 2] /= 2.0
    return identity, matched, wide


def _safe_log(values: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(values, TINY))


def family_chart(family: CandidateFamily, sample: FunctionalSample, base_log: Optional[np.ndarray] = None) -> Chart:
    """Chart of `family` on the dual points of `sample`; the base defaults to F2 o psi*."""
    y = sample.y
    base = _safe_log(sample.f2) if base_log is None else base_log
    if family.kind == 'base':
        base_lc = sample.F2.is_decreasing and sample.F2.is_logconcave and base_log is None
        return Chart('base', 0, lambda theta: base, (np.zeros(0),), base_lc)
    if family.kind == 'gaussian':
        size, _ = gaussian_layout(sample.dim)
        seeds = gaussian_seeds(y, np.exp(base - base.max()) * sample.det)
        return Chart('gaussian', size, lambda theta: gaussian_log(theta, y), seeds, True)
    n = sample.dim
    sq = np.sum(y ** 2, axis=1)
    return Chart(
        'perturbation', n + 1,
        lambda theta: base + y @ theta[:n] - theta[n] ** 2 * sq,
        (np.zeros(n + 1),), False,
    )


def default_families(logconcave_only: bool, target: Optional[float] = None) -> Tuple[CandidateFamily, ...]:
    kinds = ('base', 'gaussian') if logconcave_only else FAMILY_KINDS
    return tuple(CandidateFamily(k, target, logconcave_only) for k in kinds)


# ---------------------------------------------------------------------------
# Variational driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariationalResult:
    """Best objective over all evaluated candidates."""

    value: float
    argmin_params: dict
    iterations: int
    bound_gap: float = float('nan')
    converged: bool = True
    candidates: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def with_gap(self, reference: Optional[float]) -> 'VariationalResult':
        if reference is None or not np.isfinite(reference) or reference == 0:
            return self
        return VariationalResult(
            self.value, self.argmin_params, self.iterations, (self.value - reference) / abs(reference),
            self.converged, self.candidates, self.diagnostics,
        )

    def to_record(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not np.isfinite(v) else v
        return {
            'value': clean(self.value),
            'argmin_params': self.argmin_params,
            'iterations': self.iterations,
            'bound_gap': clean(self.bound_gap),
            'converged': self.converged,
            'candidates': {k: clean(v) for k, v in self.candidates.items()},
            'diagnostics': {k: clean(v) for k, v in self.diagnostics.items()},
        }


def _better(a: float, b: float, sense: str) -> bool:
    if not np.isfinite(a):
        return False
    if not np.isfinite(b):
        return True
    return a < b if sense == 'min' else a > b


def run_candidates(
    objective: Callable[[np.ndarray], float],
    charts: Sequence[Chart],
    sense: str,
    extras: Iterable[Tuple[str, np.ndarray]] = (),
    label: str = 'variational',
) -> VariationalResult:
    """Evaluate fixed candidates and search every parametric chart; keep the best."""
    candidates: Dict[str, float] = {}
    best_value, best_params = np.nan, {'family': None, 'params': []}
    iterations, converged = 0, True

    def consider(name, params, value):
        nonlocal best_value, best_params
        candidates[name] = float(value)
        if _better(value, best_value, sense):
            best_value, best_params = float(value), {'family': name, 'params': [float(v) for v in params]}

    for chart in charts:
        if chart.size == 0:
            consider(chart.name, [], objective(chart.log_g(np.zeros(0))))
            continue
        result = optimize(lambda theta, c=chart: objective(c.log_g(theta)), chart.seeds, sense=sense, label=f"{label}/{chart.name}")
        iterations += result.iterations
        converged &= result.converged
        consider(chart.name, result.params, result.value)
    for name, log_g in extras:
        consider(name, [], objective(log_g))

    if not np.isfinite(best_value):
        raise ValueError(f"{label}: no candidate produced a finite objective")
    debug(label, f"best {best_params['family']} = {best_value:.8g} ({iterations} iterations)")
    if not converged:
        log(label, 'simplex search hit its iteration cap; best value returned, flagged unconverged')
    return VariationalResult(best_value, best_params, iterations, converged=converged, candidates=candidates)


def _sense_for(h: OrliczFunction) -> str:
    return 'min' if h.cls == PHI else 'max'


def _charts(sample: FunctionalSample, families: Iterable[CandidateFamily], logconcave_only: bool) -> List[Chart]:
    charts = []
    for family in families:
        if logconcave_only and family.kind == 'perturbation':
            raise ValueError("A log-concave-only problem cannot use the perturbation family")
        chart = family_chart(family, sample)
        if logconcave_only and not chart.logconcave:
            debug('orlicz_core', f"skipping {chart.name}: not log-concave for these weights")
            continue
        charts.append(chart)
    return charts


# ---------------------------------------------------------------------------
# Direct functionals
# ---------------------------------------------------------------------------

def _g_on_sample(g, sample: FunctionalSample) -> np.ndarray:
    vals = np.asarray(g(sample.y), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("g must be finite and positive on grad psi(X_psi)")
    return vals


def mixed_integral(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, g,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> float:
    """V_{h,F1,F2}(psi, g) = int_{X_psi} h(g(grad psi) / F2(psi*(grad psi))) F1(psi) dx."""
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    ratio = _g_on_sample(g, sample) / np.maximum(sample.f2, TINY)
    return sample.quad.total(h(ratio) * sample.f1, label='V_h').value


def vp(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, g,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> float:
    """V_{p,F1,F2}(psi, g) = int (F2(psi*(grad psi)) / g(grad psi))^{p/n} F1(psi) dx."""
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    ratio = np.maximum(sample.f2, TINY) / _g_on_sample(g, sample)
    return sample.quad.total(ratio ** (p / n) * sample.f1, label='V_p').value


def asp_direct(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> float:
    """as_{p,F1,F2}(psi) = int F1(psi)^{n/(n+p)} (F2(psi*(grad psi)) det Hess psi)^{p/(n+p)} dx."""
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    if np.any(sample.det <= 0):
        raise ValueError("Negative Hessian determinant encountered: input is not convex")
    integrand = sample.f1 ** (n / (n + p)) * (sample.f2 * sample.det) ** (p / (n + p))
    return sample.quad.total(integrand, label='as_p').value


@dataclass(frozen=True, eq=False)
class Witness:
    """A closed-form optimiser g: values at grad psi(x) and, when known, an explicit dual-side form."""

    name: str
    on_sample: np.ndarray
    dual_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    agreement: float = float('nan')

    def __call__(self, y: np.ndarray) -> np.ndarray:
        if self.dual_fn is None:
            raise ValueError(f"Witness {self.name} has no dual-side form")
        return self.dual_fn(y)


def g0_witness(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> Witness:
    """g0(grad psi(x)) = F2(psi*)^{p/(n+p)} (F1(psi) / det Hess psi)^{n/(n+p)}, plus its dual-side form."""
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    if np.any(sample.det <= 0):
        raise ValueError("Hessian is not invertible on the required points")
    a, b = p / (n + p), n / (n + p)
    primal = sample.f2 ** a * (sample.f1 / sample.det) ** b

    dual = legendre(psi).dual

    def dual_fn(y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        psi_star = dual.values(y)
        grad = dual.gradients(y)
        det = np.linalg.det(dual.hessians(y))
        legendre_back = np.einsum('mi,mi->m', grad, y) - psi_star
        return np.asarray(F2(psi_star), dtype=float) ** a * (np.asarray(F1(legendre_back), dtype=float) * det) ** b

    with np.errstate(invalid='ignore'):
        check = dual_fn(sample.y)
    ok = np.isfinite(check) & (check > 0)
    agreement = float(np.max(np.abs(check[ok] - primal[ok]) / primal[ok])) if ok.any() else float('nan')
    return Witness('g0', primal, dual_fn, agreement)


def _i1(sample: FunctionalSample) -> float:
    return sample.i1.value


# ---------------------------------------------------------------------------
# Variational functionals
# ---------------------------------------------------------------------------

def _lp_objective(p: float, sample: FunctionalSample) -> Callable[[np.ndarray], float]:
    n = sample.dim
    f2 = np.maximum(sample.f2, TINY)

    def objective(log_g):
        g = np.exp(log_g - np.max(log_g))
        g = np.maximum(g, TINY)
        V = sample.integral((f2 / g) ** (p / n) * sample.f1)
        Ig = sample.dual_integral(g)
        if not (np.isfinite(V) and np.isfinite(Ig)) or V <= 0 or Ig <= 0:
            return np.nan
        return float(np.exp((n / (n + p)) * np.log(V) + (p / (n + p)) * np.log(Ig)))

    return objective


def asp_variational(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    families: Optional[Sequence[CandidateFamily]] = None,
    inject_witness: bool = True,
    grid: Optional[Grid] = None,
    sample: Optional[FunctionalSample] = None,
) -> VariationalResult:
    """opt_g V_p(psi, g)^{n/(n+p)} I(g, psi*)^{p/(n+p)}: inf for p >= 0, sup for p < 0."""
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    direct = asp_direct(p, F1, F2, psi, sample=sample)
    if p == 0:
        value = _i1(sample)
        return VariationalResult(value, {'family': 'any', 'params': []}, 0, (value - direct) / direct)

    families = families if families is not None else default_families(False)
    extras = []
    if inject_witness:
        extras.append(('g0', _safe_log(g0_witness(p, F1, F2, psi, sample=sample).on_sample)))
    result = run_candidates(
        _lp_objective(p, sample), _charts(sample, families, False),
        'min' if p > 0 else 'max', extras, label='asp_variational',
    )
    result.diagnostics['asp_direct'] = direct
    return result.with_gap(direct)


def _orlicz_objective(h: OrliczFunction, sample: FunctionalSample, target: float) -> Callable[[np.ndarray], float]:
    f2 = np.maximum(sample.f2, TINY)

    def objective(log_g):
        g = np.exp(log_g - np.max(log_g))
        Ig = sample.dual_integral(g)
        if not np.isfinite(Ig) or Ig <= 0:
            return np.nan
        g = np.maximum(target * g / Ig, TINY)
        return sample.integral(h(g / f2) * sample.f1)

    return objective


def gaussian_target(n: int) -> float:
    return (2.0 * np.pi) ** (n / 2.0)


def _orlicz(
    h: OrliczFunction, F1, F2, psi, families, logconcave_only: bool,
    grid, sample, reference: Optional[float], label: str,
) -> VariationalResult:
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    families = families if families is not None else default_families(logconcave_only)
    target = next((f.target for f in families if f.target is not None), gaussian_target(psi.dim))
    result = run_candidates(
        _orlicz_objective(h, sample, target), _charts(sample, families, logconcave_only), _sense_for(h), label=label,
    )
    result.diagnostics['as_bound'] = as_bound(h, F1, F2, psi, sample=sample)
    return result.with_gap(reference)


def orlicz_as(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    families: Optional[Sequence[CandidateFamily]] = None,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
    reference: Optional[float] = None,
) -> VariationalResult:
    """Orlicz affine surface area: inf (h in Phi) / sup (h in Psi) of V_h over normalised g > 0."""
    return _orlicz(h, F1, F2, psi, families, False, grid, sample, reference, 'orlicz_as')


def orlicz_gm(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    families: Optional[Sequence[CandidateFamily]] = None,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
    reference: Optional[float] = None,
) -> VariationalResult:
    """Orlicz geominimal surface area: the same optimisation over log-concave g only."""
    return _orlicz(h, F1, F2, psi, families, True, grid, sample, reference, 'orlicz_gm')


def gp(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    families: Optional[Sequence[CandidateFamily]] = None,
    cross_check: bool = True,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
    reference: Optional[float] = None,
) -> VariationalResult:
    """L_p geominimal surface area over log-concave g.

    With `cross_check` the value is recomputed as
    (sqrt(2 pi))^{np/(n+p)} orlicz_gm(t^{-p/n})^{n/(n+p)} and the relative
    discrepancy is stored in diagnostics.
    """
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    if p == 0:
        value = _i1(sample)
        return VariationalResult(value, {'family': 'any', 'params': []}, 0).with_gap(reference)

    families = families if families is not None else default_families(True)
    result = run_candidates(
        _lp_objective(p, sample), _charts(sample, families, True), 'min' if p > 0 else 'max', label='gp',
    )
    if cross_check:
        gm = orlicz_gm(power_h(p, n), F1, F2, psi, families, sample=sample)
        via = gaussian_target(n) ** (p / (n + p)) * gm.value ** (n / (n + p))
        result.diagnostics['orlicz_gm_route'] = via
        result.diagnostics['route_discrepancy'] = abs(via - result.value) / abs(result.value)
    return result.with_gap(reference)


# ---------------------------------------------------------------------------
# Bounds and closed-form references
# ---------------------------------------------------------------------------

def as_bound(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> float:
    """I(F1 o psi, psi) h((sqrt(2 pi))^n / I(F2 o psi*, psi*)): upper bound for Phi, lower for Psi."""
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    return float(sample.i1.value * h(np.array(gaussian_target(psi.dim) / sample.i2.value)))


def gp_bound(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    grid: Optional[Grid] = None, sample: Optional[FunctionalSample] = None,
) -> float:
    """I(F1 o psi)^{n/(n+p)} I(F2 o psi*)^{p/(n+p)}, the base candidate's value."""
    n = psi.dim
    sample = sample if sample is not None else functional_sample(psi, F1, F2, grid)
    return float(sample.i1.value ** (n / (n + p)) * sample.i2.value ** (p / (n + p)))


def gp_dual(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    families: Optional[Sequence[CandidateFamily]] = None,
    grid: Optional[Grid] = None,
) -> VariationalResult:
    """G_{p,F2,F1}(psi*): the geominimal area of the dual with the weight roles swapped."""
    pair = legendre(psi)
    return gp(p, F2, F1, pair.dual, families, cross_check=False, grid=grid if grid is not None else pair.dual_grid)


def ellipsoid_as_reference(h: OrliczFunction, F: WeightFunction, c: float, n: int, a: float = 1.0, b: float = 1.0) -> float:
    """orlicz_as (and orlicz_gm) of c^2|x|^2/2 with F1 = aF, F2 = bF."""
    icf = radial_integral(F, c, n).value
    return float(a * icf * h(np.array(gaussian_target(n) / (c ** (2 * n) * b * icf))))


def ellipsoid_gp_reference(p: float, F: WeightFunction, c: float, n: int) -> float:
    """gp of c^2|x|^2/2 with F1 = F2 = F and F(|x|^2/2) log-concave."""
    return float(c ** (n * (p - n) / (n + p)) * radial_integral(F, 1.0, n).value)
