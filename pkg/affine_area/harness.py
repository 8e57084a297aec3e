"""Batch verification of the identities and inequalities, one VerdictReport per assertion.

Every check returns a list of reports. `run_suite` fans the checks out over a
thread pool, then orders the reports by check_id so the JSON-lines body is
identical for any worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from affine_area import sconcave
from affine_area.errors import EmptyRegionError
from affine_area.funcrep import (
    FunctionRep,
    GaussianPotential,
    Grid,
    Quadratic,
    SEnvelope,
    auto_grid,
    compose_linear,
    perturbed_quadratic,
    sample_on,
    scaled_envelope,
)
from affine_area.mixed import MixedSpec, common_grid, ith_mixed_as, mixed_orlicz_as, mixed_orlicz_gm
from affine_area.orlicz_core import (
    H_REGISTRY,
    PHI,
    OrliczFunction,
    as_bound,
    asp_direct,
    asp_variational,
    composed_with_inverse,
    constant_h,
    ellipsoid_as_reference,
    ellipsoid_gp_reference,
    functional_sample,
    gp,
    gp_bound,
    gp_dual,
    orlicz_as,
    orlicz_gm,
    power_h,
    shape_of,
)
from affine_area.quadrature import (
    ExpNeg,
    PowerWeight,
    ScaledShifted,
    WeightFunction,
    integral_f_s,
    omega_ns,
    radial_integral,
)
from affine_area.settings import DEFAULT_SEED, MAX_WORKERS, log
from affine_area.transforms import breve, legendre, s_dual, s_santalo_center, santalo_center


RELATIONS = ('<=', '>=', '=', 'report')

# Named results the suite covers; every report's provenance is one of these keys
COVERAGE: Dict[str, str] = {
    'scaling-law': 'I(F, c) = c^{-n} I(F, 1) for the built-in weights',
    'legendre-duality': 'closed-form Legendre transform of quadratics, involution error',
    'ellipsoid-closed-forms': 'Orlicz and L_p values of Gaussian potentials',
    'lp-variational-formula': 'variational L_p affine surface area equals the direct integral',
    'orlicz-invariance': 'SL(n) invariance of Orlicz, L_p affine and geominimal areas',
    'gl-covariance': 'G_p(psi o T) = |det T|^{(p-n)/(p+n)} G_p(psi)',
    'orlicz-volume-bounds': 'Orlicz areas against I(F1 o psi) h((2 pi)^{n/2} / I(F2 o psi*))',
    'lp-geominimal-bounds': 'G_p against I(F1 o psi)^{n/(n+p)} I(F2 o psi*)^{p/(n+p)}',
    'functional-blaschke-santalo': 'I(F1 o psi) I(F2 o psi*) <= I(F-breve, 1)^2 after centering',
    'orlicz-isoperimetric': 'Orlicz areas against the matching Gaussian potential',
    'lp-isoperimetric': 'G_p ratio bounds against the Gaussian potential',
    'cyclic-inequalities': 'as_h versus H(as_h1) for H = h o h1^{-1}, conditions a-f',
    'orlicz-santalo': 'as_h(psi) as_h(psi*) <= as_h(reference)^2 for submultiplicative h',
    'lp-santalo-product': 'G_p(psi) G_p(psi*) <= I(F-breve, 1)^2 for p > 0',
    'inverse-santalo-report': 'G_p(psi) G_p(psi*) for p < 0, reported only',
    's-ball-constant': 'omega_{n,s} by quadrature',
    's-duality': 's-dual of the envelope and its gradient map',
    's-identity': '(1 + ns) I(f) computed two ways',
    's-closed-forms': 'Orlicz and L_p values of s-concave envelopes',
    's-variational-formula': 'variational L_p affine area of s-concave f equals the direct integral',
    's-volume-bounds': 's-concave Orlicz areas against (1 + ns) I(f) h(omega / I(f polar))',
    's-blaschke-santalo': 'I(f) I(f polar) <= omega_{n,s}^2 after centering',
    's-isoperimetric': 's-concave Orlicz areas against the envelope with c_s / c-bar_s',
    's-cyclic': 'cyclic inequalities for s-concave Orlicz areas',
    's-lp-isoperimetric': 'G_p^(s) ratio bounds against the unit envelope',
    's-santalo-product': 'G_p^(s)(psi) G_p^(s)(psi*_(s)) <= omega_{n,s}^2 for p > 0',
    'alexandrov-fenchel': '[mixed area]^m <= product of single areas',
    'partial-alexandrov-fenchel': 'r-partial Alexandrov-Fenchel products for Psi^m',
    'mixed-isoperimetric': 'mixed areas against products of Gaussian references',
    'ith-interpolation': '[as_j]^{k-i} <= [as_i]^{k-j} [as_k]^{j-i} for Psi^2',
    'ith-degenerate': 'i = 0 and i = n reduce to single areas',
    's-limit-consistency': 'small-s envelope against the Gaussian limit, reported only',
}

# Checks (see ALL_CHECKS) whose jobs produce each provenance key
COVERAGE_CHECKS: Dict[str, Tuple[str, ...]] = {
    'scaling-law': ('scaling_law',),
    'legendre-duality': ('legendre',),
    'ellipsoid-closed-forms': ('closed_forms',),
    'lp-variational-formula': ('variational',),
    'orlicz-invariance': ('invariance',),
    'gl-covariance': ('gl_covariance',),
    'orlicz-volume-bounds': ('bounds',),
    'lp-geominimal-bounds': ('bounds',),
    'functional-blaschke-santalo': ('blaschke_santalo',),
    'orlicz-isoperimetric': ('isoperimetric',),
    'lp-isoperimetric': ('lp_isoperimetric',),
    'cyclic-inequalities': ('cyclic',),
    'orlicz-santalo': ('orlicz_santalo',),
    'lp-santalo-product': ('santalo_product',),
    'inverse-santalo-report': ('santalo_product', 'sconcave'),
    'alexandrov-fenchel': ('af',),
    'partial-alexandrov-fenchel': ('af',),
    'mixed-isoperimetric': ('af',),
    'ith-interpolation': ('af',),
    'ith-degenerate': ('af',),
}
COVERAGE_CHECKS.update({key: ('sconcave',) for key in COVERAGE if key.startswith('s-')})

DEFAULT_TOLERANCES: Dict[str, float] = {
    'equality': 0.01,
    'closed_form': 0.01,
    'variational': 0.02,
    'invariance': 0.01,
    'inequality': 0.01,
    'scaling': 1e-6,
    'legendre': 1e-3,
    'santalo_product': 0.015,
    's_closed_form': 0.02,
    'omega': 0.005,
}

ALL_CHECKS = (
    'scaling_law', 'legendre', 'closed_forms', 'variational', 'invariance', 'gl_covariance',
    'bounds', 'blaschke_santalo', 'isoperimetric', 'lp_isoperimetric', 'cyclic', 'orlicz_santalo',
    'santalo_product', 'sconcave', 'af',
)

CYCLIC_CONDITIONS = {'a': '<=', 'b': '<=', 'c': '<=', 'd': '>=', 'e': '>=', 'f': '>='}
# Jensen-type conditions: which side is optimised first and handed to the other as a candidate
_CYCLIC_FIRST = {'c': 'h1', 'e': 'h', 'f': 'h'}


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _clean(value):
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@dataclass(frozen=True)
class VerdictReport:
    """Outcome of one identity / inequality check.

    `slack` is the signed relative margin: positive when the relation holds
    with room to spare. `status` is pass when slack >= -tolerance, flagged
    when the shortfall is within the optimiser gap, fail otherwise.
    """

    check_id: str
    lhs: float
    rhs: float
    relation: str
    tolerance: float
    slack: float
    status: str
    provenance: str
    runtime: float = 0.0
    detail: Dict[str, object] = field(default_factory=dict)

    def with_runtime(self, seconds: float) -> 'VerdictReport':
        return VerdictReport(
            self.check_id, self.lhs, self.rhs, self.relation, self.tolerance, self.slack,
            self.status, self.provenance, seconds, self.detail,
        )

    def to_record(self, timings: bool = False) -> dict:
        record = {
            'check_id': self.check_id,
            'lhs': _clean(self.lhs),
            'rhs': _clean(self.rhs),
            'relation': self.relation,
            'tolerance': _clean(self.tolerance),
            'slack': _clean(self.slack),
            'status': self.status,
            'provenance': self.provenance,
            'detail': _clean(self.detail),
        }
        if timings:
            record['runtime'] = round(self.runtime, 6)
        return record


def verdict(
    check_id: str, lhs: float, rhs: float, relation: str, tolerance: float, provenance: str,
    gap: float = 0.0, detail: Optional[dict] = None,
) -> VerdictReport:
    if relation not in RELATIONS:
        raise ValueError(f"Unknown relation {relation!r}; expected one of {RELATIONS}")
    if provenance not in COVERAGE:
        raise ValueError(f"Unknown provenance {provenance!r}")
    lhs, rhs = float(lhs), float(rhs)
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        return VerdictReport(check_id, lhs, rhs, relation, tolerance, float('nan'), 'fail', provenance, detail=detail or {})
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if relation == '<=':
        slack = (rhs - lhs) / scale
    elif relation == '>=':
        slack = (lhs - rhs) / scale
    elif relation == '=':
        slack = -abs(lhs - rhs) / scale
    else:
        slack = (lhs - rhs) / scale
    if relation == 'report' or slack >= -tolerance:
        status = 'pass'
    elif gap > 0 and slack >= -(tolerance + gap):
        status = 'flagged'
    else:
        status = 'fail'
    return VerdictReport(check_id, lhs, rhs, relation, float(tolerance), slack, status, provenance, detail=detail or {})


def _search_gap(result) -> float:
    """Spread of the candidate values when the simplex search stopped unconverged, else 0."""
    if result.converged:
        return 0.0
    values = np.array([v for v in result.candidates.values() if np.isfinite(v)])
    if values.size < 2:
        return 0.0
    return float((values.max() - values.min()) / max(abs(result.value), 1e-300))


# ---------------------------------------------------------------------------
# Roster helpers
# ---------------------------------------------------------------------------

def random_det_one(n: int, rng: np.random.Generator) -> np.ndarray:
    """Rotation x unit-upper-triangular shear x diagonal with det +-1."""
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    shear = np.eye(n) + np.triu(rng.normal(scale=0.3, size=(n, n)), 1)
    d = np.exp(rng.normal(scale=0.2, size=n))
    d /= np.prod(d) ** (1.0 / n)
    if rng.random() < 0.5:
        d[0] = -d[0]
    return Q @ shear @ np.diag(d)


def random_spd(n: int, rng: np.random.Generator, lo: float = 0.5, hi: float = 2.0) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eig = rng.uniform(lo, hi, size=n)
    A = Q @ np.diag(eig) @ Q.T
    return 0.5 * (A + A.T)


def anisotropic_quadratic(n: int) -> Quadratic:
    """<diag(1, 3, ...) x, x> (or 0.8 x^2 on the line)."""
    if n == 1:
        return Quadratic(np.array([[0.8]]))
    return Quadratic(np.diag(1.0 + 2.0 * np.arange(n)))


def logconcave_roster(n: int, count: int, seed: int) -> List[Tuple[str, FunctionRep]]:
    """Quadratics plus a small quartic bump, randomised but seeded."""
    rng = np.random.default_rng([seed, n, 1])
    roster = []
    for k in range(count):
        A = 0.5 * random_spd(n, rng)
        eps = float(rng.uniform(0.02, 0.2))
        center = rng.normal(scale=0.3, size=n)
        roster.append((f"perturbed{k:02d}", perturbed_quadratic(A, eps, center)))
    return roster


def sconcave_roster(n: int, s: float, seed: int) -> List[Tuple[str, FunctionRep]]:
    rng = np.random.default_rng([seed, n, 2])
    A = random_spd(n, rng, 0.7, 1.4)
    return [
        ('envelope', SEnvelope(s, 1.0, n)),
        ('ellipsoidal', scaled_envelope(s, A)),
        ('perturbed', sconcave.perturbed_envelope(s, A, 0.1)),
    ]


def reference_weight(F1: WeightFunction, F2: WeightFunction, n: int) -> Tuple[WeightFunction, float]:
    """F-breve and I(F-breve, 1); F itself when F1 == F2 is log-concave and decreasing."""
    if F1 == F2 and F1.is_logconcave and F1.is_decreasing:
        Fb = F1
    else:
        Fb = breve(F1, F2)
    return Fb, radial_integral(Fb, 1.0, n).value


def _grid(psi: FunctionRep, counts: Optional[int]) -> Grid:
    return auto_grid(psi, counts)


def _expanded(grid: Grid, factor: float = 1.5) -> Grid:
    mid = 0.5 * (grid.lower + grid.upper)
    half = 0.5 * (grid.upper - grid.lower) * factor
    return Grid(mid - half, mid + half, grid.counts)


_DUALITY_COUNTS = {1: 801, 2: 161}


def _valid_ps(ps: Sequence[float], n: int) -> List[float]:
    return [float(p) for p in ps if p != -n]


WEIGHT = ExpNeg()


# ---------------------------------------------------------------------------
# Closed forms, scaling, duality
# ---------------------------------------------------------------------------

def check_closed_forms(n: int, c_values: Sequence[float], counts: Optional[int] = None, tol: float = 0.01) -> List[VerdictReport]:
    """Gaussian potentials c^2|x|^2/2 against their closed-form Orlicz and L_p values."""
    reports = []
    hs = (power_h(1.0, n), power_h(2.0, n), constant_h())
    for c in c_values:
        psi = GaussianPotential(c, n)
        sample = functional_sample(psi, WEIGHT, WEIGHT, _grid(psi, counts))
        for h in hs:
            ref = ellipsoid_as_reference(h, WEIGHT, c, n)
            result = orlicz_as(h, WEIGHT, WEIGHT, psi, sample=sample, reference=ref)
            reports.append(verdict(
                f"closed-forms/n{n}/c{c:g}/as[{h.name}]", result.value, ref, '=', tol, 'ellipsoid-closed-forms',
                gap=_search_gap(result), detail={'bound_gap': result.bound_gap},
            ))
        for p in (1.0, 2.0):
            ref = ellipsoid_gp_reference(p, WEIGHT, c, n)
            result = gp(p, WEIGHT, WEIGHT, psi, cross_check=False, sample=sample, reference=ref)
            reports.append(verdict(f"closed-forms/n{n}/c{c:g}/gp[{p:g}]", result.value, ref, '=', tol, 'ellipsoid-closed-forms', gap=_search_gap(result)))
    return reports


def check_scaling_law(n: int, c_values: Sequence[float] = (0.5, 2.0), tol: float = 1e-6) -> List[VerdictReport]:
    weights = (ExpNeg(), PowerWeight(n + 1.0), ScaledShifted(ExpNeg(), 2.0, 0.5))
    reports = []
    for F in weights:
        unit = radial_integral(F, 1.0, n).value
        for c in c_values:
            scaled = radial_integral(F, c, n).value
            reports.append(verdict(f"scaling/n{n}/{F.describe()}/c{c:g}", scaled, c ** (-n) * unit, '=', tol, 'scaling-law'))
    return reports


def check_legendre(n: int, counts: Optional[int] = None, tol: float = 1e-3) -> List[VerdictReport]:
    """Discrete Legendre transform of a sampled quadratic against A^{-1}/4."""
    A = np.diag([1.0, 2.0, 3.0][:n])
    exact = Quadratic(A)
    if n == 1:
        grid = auto_grid(exact, counts)
    else:
        grid = Grid.cube(2.4, n, counts or _DUALITY_COUNTS.get(n, 31))
    pair = legendre(sample_on(exact, grid))
    ys = pair.dual_grid.points
    xstar = ys @ np.linalg.inv(2.0 * A)
    inner = np.all(np.abs(xstar) <= 0.8 * grid.upper, axis=1)
    err = float(np.max(np.abs(pair.dual.values(ys[inner]) - exact.conjugate().values(ys[inner]))))
    spacing = float(np.max(grid.spacing))
    return [
        verdict(f"legendre/n{n}/quadratic", err, tol, '<=', 0.0, 'legendre-duality', detail={'nodes': int(inner.sum())}),
        verdict(f"legendre/n{n}/involution", pair.involution_error, 2.0 * spacing, '<=', 0.0, 'legendre-duality'),
    ]


def check_variational(n: int, p_values: Sequence[float], counts: Optional[int] = None, tol: float = 0.02) -> List[VerdictReport]:
    reports = []
    for name, psi in (('gaussian', GaussianPotential(1.0, n)), ('anisotropic', anisotropic_quadratic(n))):
        sample = functional_sample(psi, WEIGHT, WEIGHT, _grid(psi, counts))
        for p in _valid_ps(p_values, n):
            direct = asp_direct(p, WEIGHT, WEIGHT, psi, sample=sample)
            seeded = asp_variational(p, WEIGHT, WEIGHT, psi, sample=sample)
            reports.append(verdict(f"variational/n{n}/{name}/p{p:g}/witness", seeded.value, direct, '=', tol, 'lp-variational-formula'))
            blind = asp_variational(p, WEIGHT, WEIGHT, psi, inject_witness=False, sample=sample)
            reports.append(verdict(
                f"variational/n{n}/{name}/p{p:g}/families", blind.value, direct, '>=' if p > 0 else '<=', tol,
                'lp-variational-formula', detail={'best': blind.argmin_params.get('family')},
            ))
    return reports


# ---------------------------------------------------------------------------
# Invariance
# ---------------------------------------------------------------------------

S_INVARIANCE = 0.5

INVARIANT_QUANTITIES: Dict[str, Callable[[FunctionRep, Grid], float]] = {
    'orlicz_as': lambda psi, grid: orlicz_as(power_h(1.0, psi.dim), WEIGHT, WEIGHT, psi, grid=grid).value,
    'orlicz_gm': lambda psi, grid: orlicz_gm(H_REGISTRY['sqrt'](), WEIGHT, WEIGHT, psi, grid=grid).value,
    'asp_direct': lambda psi, grid: asp_direct(2.0, WEIGHT, WEIGHT, psi, grid=grid),
    'gp': lambda psi, grid: gp(1.0, WEIGHT, WEIGHT, psi, cross_check=False, grid=grid).value,
    'asp_s_direct': lambda psi, grid: sconcave.asp_s_direct(1.0, sconcave.sconcave_pair(psi, S_INVARIANCE, grid=grid)),
}


def _evaluate_expanding(quantity: Callable[[FunctionRep, Grid], float], psi: FunctionRep, grid: Grid) -> float:
    try:
        return quantity(psi, grid)
    except EmptyRegionError:
        log('harness', f"empty regular set for {psi.describe()}; retrying on a 1.5x box")
        return quantity(psi, _expanded(grid))


def check_invariance(
    quantity_id: str, psi: FunctionRep, T_count: int, seed: int = DEFAULT_SEED,
    counts: Optional[int] = None, tol: float = 0.01, label: str = 'psi',
) -> List[VerdictReport]:
    """Compare a quantity at psi and at psi o T for T_count seeded matrices with |det T| = 1."""
    if quantity_id not in INVARIANT_QUANTITIES:
        raise ValueError(f"Unknown invariant quantity {quantity_id!r}; expected one of {sorted(INVARIANT_QUANTITIES)}")
    quantity = INVARIANT_QUANTITIES[quantity_id]
    n = psi.dim
    base = _evaluate_expanding(quantity, psi, _grid(psi, counts))
    rng = np.random.default_rng([seed, n, 3])
    reports = []
    for k in range(T_count):
        moved = compose_linear(psi, random_det_one(n, rng))
        value = _evaluate_expanding(quantity, moved, _grid(moved, counts))
        reports.append(verdict(f"invariance/n{n}/{quantity_id}/{label}/T{k:02d}", value, base, '=', tol, 'orlicz-invariance'))
    return reports


def check_gl_covariance(
    p: float, psi: FunctionRep, seed: int = DEFAULT_SEED, counts: Optional[int] = None,
    tol: float = 0.01, label: str = 'psi', scale: float = 1.5,
) -> List[VerdictReport]:
    n = psi.dim
    rng = np.random.default_rng([seed, n, 4])
    T = scale * random_det_one(n, rng)
    moved = compose_linear(psi, T)
    base = gp(p, WEIGHT, WEIGHT, psi, cross_check=False, grid=_grid(psi, counts)).value
    value = gp(p, WEIGHT, WEIGHT, moved, cross_check=False, grid=_grid(moved, counts)).value
    expected = abs(np.linalg.det(T)) ** ((p - n) / (p + n)) * base
    return [verdict(f"gl-covariance/n{n}/{label}/p{p:g}", value, expected, '=', tol, 'gl-covariance')]


# ---------------------------------------------------------------------------
# Bounds, Blaschke-Santalo, isoperimetric
# ---------------------------------------------------------------------------

def check_bounds(
    psi: FunctionRep, label: str, counts: Optional[int] = None, tol: float = 0.01,
    F1: WeightFunction = WEIGHT, F2: WeightFunction = WEIGHT,
) -> List[VerdictReport]:
    n = psi.dim
    sample = functional_sample(psi, F1, F2, _grid(psi, counts))
    reports = []
    phi, psi_h = power_h(1.0, n), H_REGISTRY['sqrt']()
    as_phi = orlicz_as(phi, F1, F2, psi, sample=sample)
    reports.append(verdict(f"bounds/n{n}/{label}/as[{phi.name}]", as_phi.value, as_bound(phi, F1, F2, psi, sample=sample), '<=', tol, 'orlicz-volume-bounds'))
    as_psi = orlicz_as(psi_h, F1, F2, psi, sample=sample)
    reports.append(verdict(f"bounds/n{n}/{label}/as[{psi_h.name}]", as_psi.value, as_bound(psi_h, F1, F2, psi, sample=sample), '>=', tol, 'orlicz-volume-bounds'))
    gm_phi = orlicz_gm(phi, F1, F2, psi, sample=sample)
    reports.append(verdict(f"bounds/n{n}/{label}/as-vs-gm[{phi.name}]", as_phi.value, gm_phi.value, '<=', tol, 'orlicz-volume-bounds'))
    for p in (1.0, 2.0):
        value = gp(p, F1, F2, psi, cross_check=False, sample=sample).value
        reports.append(verdict(f"bounds/n{n}/{label}/gp[{p:g}]", value, gp_bound(p, F1, F2, psi, sample=sample), '<=', tol, 'lp-geominimal-bounds'))
    return reports


def _centered_sample(psi: FunctionRep, F1: WeightFunction, F2: WeightFunction, counts: Optional[int]):
    z0, centered = santalo_center(psi, F1, F2, _grid(psi, counts))
    return z0, centered, functional_sample(centered, F1, F2, _grid(centered, counts))


def check_bs(
    psi: FunctionRep, F1: WeightFunction = WEIGHT, F2: WeightFunction = WEIGHT, label: str = 'psi',
    counts: Optional[int] = None, tol: float = 0.01, equality: bool = False,
) -> List[VerdictReport]:
    """I(F1 o psi) I(F2 o psi*) <= I(F-breve, 1)^2 after centering; equality for quadratics."""
    n = psi.dim
    _, ib = reference_weight(F1, F2, n)
    z0, _, sample = _centered_sample(psi, F1, F2, counts)
    product = sample.i1.value * sample.i2.value
    detail = {'z0': z0.tolist(), 'i1': sample.i1.value, 'i2': sample.i2.value}
    reports = [verdict(f"blaschke-santalo/n{n}/{label}", product, ib ** 2, '<=', tol, 'functional-blaschke-santalo', detail=detail)]
    if equality:
        reports.append(verdict(f"blaschke-santalo/n{n}/{label}/equality", product, ib ** 2, '=', tol, 'functional-blaschke-santalo'))
    return reports


def check_isoperimetric(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, label: str = 'psi',
    counts: Optional[int] = None, tol: float = 0.01, equality: bool = False,
) -> List[VerdictReport]:
    """Centered psi against the Gaussian potential with matching dual (c-hat) or primal (c-bar) volume."""
    n = psi.dim
    Fb, ib = reference_weight(F1, F2, n)
    _, _, sample = _centered_sample(psi, F1, F2, counts)
    result = orlicz_as(h, F1, F2, sample.psi, sample=sample)
    value = result.value
    c_hat = (ib / sample.i2.value) ** (1.0 / n)
    c_bar = (ib / sample.i1.value) ** (1.0 / n)
    prefix = f"isoperimetric/n{n}/{label}/{h.name}"
    comparisons = []
    if h.cls == PHI:
        comparisons.append(('c-hat', ellipsoid_as_reference(h, Fb, 1.0 / c_hat, n), '<='))
        if h.monotonicity in ('decreasing', 'constant'):
            comparisons.append(('c-bar', ellipsoid_as_reference(h, Fb, c_bar, n), '<='))
    else:
        comparisons.append(('c-bar', ellipsoid_as_reference(h, Fb, c_bar, n), '>='))
    reports = []
    for tag, ref, relation in comparisons:
        reports.append(verdict(f"{prefix}/{tag}", value, ref, '=' if equality else relation, tol, 'orlicz-isoperimetric', gap=_search_gap(result)))
    return reports


def check_lp_isoperimetric(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, label: str = 'psi',
    counts: Optional[int] = None, tol: float = 0.01,
) -> List[VerdictReport]:
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    _, ib = reference_weight(F1, F2, n)
    _, _, sample = _centered_sample(psi, F1, F2, counts)
    ratio = gp(p, F1, F2, sample.psi, cross_check=False, sample=sample).value / ib
    r1, r2 = sample.i1.value / ib, sample.i2.value / ib
    if p >= 0:
        rhs, relation = min(r2 ** ((p - n) / (p + n)), r1 ** ((n - p) / (n + p))), '<='
    elif p > -n:
        rhs, relation = r1 ** ((n - p) / (n + p)), '>='
    else:
        rhs, relation = r2 ** ((p - n) / (p + n)), '>='
    return [verdict(f"lp-isoperimetric/n{n}/{label}/p{p:g}", ratio, rhs, relation, tol, 'lp-isoperimetric')]


# ---------------------------------------------------------------------------
# Cyclic inequalities
# ---------------------------------------------------------------------------

def cyclic_instance(tag: str, n: int) -> Tuple[OrliczFunction, OrliczFunction]:
    """A concrete (h, h1) satisfying condition `tag`."""
    table = {
        'a': lambda: (H_REGISTRY['square'](), H_REGISTRY['sqrt']()),
        'b': lambda: (H_REGISTRY['inv'](), H_REGISTRY['square']()),
        'c': lambda: (power_h(1.0, n), power_h(2.0, n)),
        'd': lambda: (H_REGISTRY['sqrt'](), H_REGISTRY['square']()),
        'e': lambda: (H_REGISTRY['inv'](), H_REGISTRY['sqrt']()),
        'f': lambda: (power_h(2.0, n), power_h(1.0, n)),
    }
    if tag not in table:
        raise ValueError(f"Unknown cyclic condition {tag!r}; expected one of {sorted(table)}")
    return table[tag]()


def validate_condition(tag: str, h: OrliczFunction, h1: OrliczFunction) -> Callable[[np.ndarray], np.ndarray]:
    """H = h o h1^{-1} after checking that (h, h1) really satisfy condition `tag`."""
    H = composed_with_inverse(h, h1)
    shape = shape_of(H, np.logspace(-2, 2, 32))
    same = h.cls == h1.cls
    rules = {
        'a': h.cls == PHI and h1.cls != PHI and shape['increasing'],
        'b': h.cls == PHI and same and shape['decreasing'],
        'c': same and shape['concave'] and shape['increasing'],
        'd': h.cls != PHI and h1.cls == PHI and shape['increasing'],
        'e': not same and shape['convex'] and shape['decreasing'],
        'f': same and shape['convex'] and shape['increasing'],
    }
    if tag not in rules:
        raise ValueError(f"Unknown cyclic condition {tag!r}")
    if not rules[tag]:
        raise ValueError(f"h={h.name}, h1={h1.name} do not satisfy cyclic condition {tag!r}")
    return H


def _single_spec(h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, grid: Grid) -> MixedSpec:
    return MixedSpec((psi,), (h,), (F1,), (F2,), grid)


def check_cyclic(
    h: OrliczFunction, h1: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep,
    condition_tag: str, label: str = 'psi', counts: Optional[int] = None, tol: float = 0.01,
) -> List[VerdictReport]:
    """as_h / I1 against H(as_h1 / I1); the Jensen-type cases share an optimiser between the two sides."""
    H = validate_condition(condition_tag, h, h1)
    n = psi.dim
    grid = _grid(psi, counts)
    spec_h, spec_h1 = _single_spec(h, F1, F2, psi, grid), _single_spec(h1, F1, F2, psi, grid)
    first = _CYCLIC_FIRST.get(condition_tag)
    if first == 'h1':
        res_h1 = mixed_orlicz_as(spec_h1)
        res_h = mixed_orlicz_as(spec_h, extras=[('h1-optimum', res_h1.logs)])
    elif first == 'h':
        res_h = mixed_orlicz_as(spec_h)
        res_h1 = mixed_orlicz_as(spec_h1, extras=[('h-optimum', res_h.logs)])
    else:
        res_h, res_h1 = mixed_orlicz_as(spec_h), mixed_orlicz_as(spec_h1)
    norm = spec_h.full[0].i1.value
    lhs = res_h.value / norm
    rhs = float(H(np.array([res_h1.value / norm]))[0])
    return [verdict(
        f"cyclic/n{n}/{label}/{condition_tag}[{h.name},{h1.name}]", lhs, rhs, CYCLIC_CONDITIONS[condition_tag], tol,
        'cyclic-inequalities', detail={'as_h': res_h.value, 'as_h1': res_h1.value},
    )]


# ---------------------------------------------------------------------------
# Santalo-type products
# ---------------------------------------------------------------------------

def check_orlicz_santalo(
    h: OrliczFunction, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, label: str = 'psi',
    counts: Optional[int] = None, tol: float = 0.015,
) -> List[VerdictReport]:
    n = psi.dim
    if h.cls != PHI or not h.submultiplicative:
        raise ValueError(f"h={h.name} must lie in {PHI} and be submultiplicative")
    Fb, _ = reference_weight(F1, F2, n)
    _, centered, sample = _centered_sample(psi, F1, F2, counts)
    primal = orlicz_as(h, F1, F2, centered, sample=sample).value
    pair = legendre(centered)
    dual = orlicz_as(h, F2, F1, pair.dual, grid=pair.dual_grid).value
    ref = ellipsoid_as_reference(h, Fb, 1.0, n) ** 2
    return [verdict(f"orlicz-santalo/n{n}/{label}/{h.name}", primal * dual, ref, '<=', tol, 'orlicz-santalo')]


def check_santalo_product(
    p: float, F1: WeightFunction, F2: WeightFunction, psi: FunctionRep, label: str = 'psi',
    counts: Optional[int] = None, tol: float = 0.015, equality: bool = False,
) -> List[VerdictReport]:
    """G_p(psi) G_{p,F2,F1}(psi*) against I(F-breve, 1)^2; p < 0 is reported only."""
    n = psi.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    _, ib = reference_weight(F1, F2, n)
    _, centered, sample = _centered_sample(psi, F1, F2, counts)
    primal = gp(p, F1, F2, centered, cross_check=False, sample=sample).value
    dual = gp_dual(p, F1, F2, centered).value
    check_id = f"santalo-product/n{n}/{label}/p{p:g}"
    if p < 0:
        return [verdict(check_id, primal * dual, ib ** 2, 'report', tol, 'inverse-santalo-report', detail={'report_only': True})]
    relation = '=' if equality else '<='
    return [verdict(check_id, primal * dual, ib ** 2, relation, tol, 'lp-santalo-product')]


# ---------------------------------------------------------------------------
# s-concave functions
# ---------------------------------------------------------------------------

S_CYCLIC_DEFAULT = ('a', 'b', 'd')


def check_s_closed_forms(
    n: int, s: float, c_values: Sequence[float], p_values: Sequence[float] = (1.0, 2.0),
    counts: Optional[int] = None, tol: float = 0.02, omega_tol: float = 0.005, dual_tol: float = 1e-3,
) -> List[VerdictReport]:
    """Envelopes: ball constant, s-duality, gradient map and closed-form Orlicz / L_p values."""
    reports = []
    unit = SEnvelope(s, 1.0, n)
    unit_pair = sconcave.sconcave_pair(unit, s, grid=_grid(unit, counts))
    exact = 4.0 * np.sqrt(2.0) / 3.0 if (n == 1 and np.isclose(s, 0.5)) else omega_ns(n, s)
    reports.append(verdict(
        f"s-closed-forms/n{n}/s{s:g}/omega", integral_f_s(unit_pair.sdual, strict=False).value, exact, '=', omega_tol,
        's-ball-constant',
    ))

    hs = (power_h(1.0, n), H_REGISTRY['sqrt'](), constant_h())
    for c in c_values:
        env = SEnvelope(s, c, n)
        grid = auto_grid(env, counts if counts is not None else _DUALITY_COUNTS.get(n, 31))
        sampled = s_dual(sample_on(env, grid), s)
        closed = SEnvelope(s, 1.0 / c, n)
        ys = sampled.dual_grid.points
        inner = np.linalg.norm(ys, axis=1) <= 0.6 * closed.radius
        err = float(np.max(np.abs(sampled.dual.values(ys[inner]) - closed.values(ys[inner]))))
        reports.append(verdict(f"s-closed-forms/n{n}/s{s:g}/c{c:g}/s-dual", err, dual_tol, '<=', 0.0, 's-duality'))
        pts = sampled.sample.region.points
        near = np.linalg.norm(pts, axis=1) <= 0.6 * env.radius
        drift = np.abs(sampled.tmap_samples[near] - c ** 2 * pts[near])
        rel = float(np.max(drift) / max(c ** 2 * float(np.max(np.abs(pts[near]))), 1e-12))
        reports.append(verdict(f"s-closed-forms/n{n}/s{s:g}/c{c:g}/t-map", rel, dual_tol, '<=', 0.0, 's-duality'))

        sp = sconcave.sconcave_pair(env, s, grid=_grid(env, counts))
        for h in hs:
            ref = sconcave.envelope_as_reference(h, s, c, n)
            value = sconcave.orlicz_as_s(h, sp, reference=ref).value
            reports.append(verdict(f"s-closed-forms/n{n}/s{s:g}/c{c:g}/as[{h.name}]", value, ref, '=', tol, 's-closed-forms'))
        if s <= 0.5:
            for p in p_values:
                if p <= 0:
                    continue
                ref = sconcave.envelope_gp_reference(p, s, c, n)
                value = sconcave.gp_s(p, sp, cross_check=False, reference=ref).value
                reports.append(verdict(f"s-closed-forms/n{n}/s{s:g}/c{c:g}/gp[{p:g}]", value, ref, '=', tol, 's-closed-forms'))
    return reports


def _s_normaliser(sp: sconcave.SConcavePair) -> float:
    """(1 + ns) I(f) in the form the Orlicz objective integrates it."""
    return sp.integral(sp.psitilde * sp.u ** (1.0 / sp.s - 1.0))


def check_sconcave_suite(
    sp: sconcave.SConcavePair, h_roster: Sequence[OrliczFunction], p_roster: Sequence[float],
    label: str = 'f', counts: Optional[int] = None, tol: float = 0.02,
    cyclic_tags: Sequence[str] = S_CYCLIC_DEFAULT,
) -> List[VerdictReport]:
    """Identity, bounds, centering, Santalo, isoperimetric, cyclic and L_p ratio checks for one s-concave f."""
    n, s = sp.dim, sp.s
    omega = omega_ns(n, s)
    prefix = f"sconcave/n{n}/s{s:g}/{label}"
    reports = []

    fi = integral_f_s(sp.sdual, strict=False)
    reports.append(verdict(
        f"{prefix}/identity", fi.identity.value, fi.direct.value, '=', max(fi.tolerance / fi.value, 1e-6), 's-identity',
        detail=fi.to_record(),
    ))

    for p in p_roster:
        if p == -n or p <= 0:
            continue
        direct = sconcave.asp_s_direct(p, sp)
        value = sconcave.asp_s_variational(p, sp).value
        reports.append(verdict(f"{prefix}/variational/p{p:g}", value, direct, '=', tol, 's-variational-formula'))

    results = {}
    for h in h_roster:
        results[h.name] = sconcave.orlicz_as_s(h, sp).value
        relation = '<=' if h.cls == PHI else '>='
        reports.append(verdict(f"{prefix}/bound[{h.name}]", results[h.name], sconcave.as_s_bound(h, sp), relation, tol, 's-volume-bounds'))

    norm = _s_normaliser(sp)
    for tag in cyclic_tags:
        h, h1 = cyclic_instance(tag, n)
        H = validate_condition(tag, h, h1)
        lhs = sconcave.orlicz_as_s(h, sp).value / norm
        rhs = float(H(np.array([sconcave.orlicz_as_s(h1, sp).value / norm]))[0])
        reports.append(verdict(f"{prefix}/cyclic/{tag}[{h.name},{h1.name}]", lhs, rhs, CYCLIC_CONDITIONS[tag], tol, 's-cyclic'))

    z0, centered = s_santalo_center(sp.psi, s, sp.sdual.primal_grid)
    spc = sp if centered is sp.psi else sconcave.sconcave_pair(centered, s, grid=_grid(centered, counts))
    i_f = integral_f_s(spc.sdual, strict=False).value
    i_polar = sconcave.integral_polar(spc).value
    reports.append(verdict(
        f"{prefix}/santalo", i_f * i_polar, omega ** 2, '<=', tol, 's-blaschke-santalo', detail={'z0': z0.tolist()},
    ))

    cs, cbar = sconcave.c_s(spc), sconcave.c_bar_s(spc)
    for h in h_roster:
        value = results[h.name] if spc is sp else sconcave.orlicz_as_s(h, spc).value
        comparisons = []
        if h.cls == PHI:
            comparisons.append(('c-s', cs, '<='))
            if h.monotonicity in ('decreasing', 'constant'):
                comparisons.append(('c-bar', cbar, '<='))
        else:
            comparisons.append(('c-bar', cbar, '>='))
        for tag, c, relation in comparisons:
            ref = sconcave.envelope_as_reference(h, s, c, n)
            reports.append(verdict(f"{prefix}/isoperimetric/{h.name}/{tag}", value, ref, relation, tol, 's-isoperimetric'))

    if sconcave.g1_is_logconcave(spc):
        r1, r2 = i_f / omega, i_polar / omega
        for p in p_roster:
            if p == -n:
                continue
            ratio = sconcave.gp_s(p, spc, cross_check=False).value / omega
            if p >= 0:
                rhs, relation = min(r2 ** ((p - n) / (p + n)), r1 ** ((n - p) / (n + p))), '<='
            elif p > -n:
                rhs, relation = r1 ** ((n - p) / (n + p)), '>='
            else:
                rhs, relation = r2 ** ((p - n) / (p + n)), '>='
            reports.append(verdict(f"{prefix}/lp-ratio/p{p:g}", ratio, rhs, relation, tol, 's-lp-isoperimetric'))

        if spc.sdual.dual.closed_form:
            swapped = sconcave.swap(spc)
            if sconcave.g1_is_logconcave(swapped):
                for p in p_roster:
                    if p == -n or p == 0:
                        continue
                    product = sconcave.gp_s(p, spc, cross_check=False).value * sconcave.gp_s(p, swapped, cross_check=False).value
                    if p > 0:
                        reports.append(verdict(f"{prefix}/santalo-product/p{p:g}", product, omega ** 2, '<=', tol, 's-santalo-product'))
                    else:
                        reports.append(verdict(
                            f"{prefix}/santalo-product/p{p:g}", product, omega ** 2, 'report', tol, 'inverse-santalo-report',
                            detail={'report_only': True},
                        ))
    return reports


S_LIMIT = 1e-3


def check_s_limit(n: int, p_values: Sequence[float] = (1.0, 2.0), counts: Optional[int] = None, s: float = S_LIMIT) -> List[VerdictReport]:
    """Envelope at small s against the Gaussian it tends to; normalised by I(f), reported only."""
    env = SEnvelope(s, 1.0, n)
    sp = sconcave.sconcave_pair(env, s, grid=_grid(env, counts))
    gauss = GaussianPotential(1.0, n)
    sample = functional_sample(gauss, WEIGHT, WEIGHT, _grid(gauss, counts))
    i_f = integral_f_s(sp.sdual, strict=False).value
    i_gauss = sample.i1.value
    prefix = f"s-limit/n{n}/s{s:g}"
    reports = [verdict(
        f"{prefix}/integral", i_f, i_gauss, 'report', 0.0, 's-limit-consistency',
        detail={'relative_gap': abs(i_f / i_gauss - 1.0)},
    )]
    for p in p_values:
        if p <= 0 or p == -n:
            continue
        lhs = sconcave.asp_s_direct(p, sp) / i_f
        rhs = asp_direct(p, WEIGHT, WEIGHT, gauss, sample=sample) / i_gauss
        reports.append(verdict(
            f"{prefix}/asp/p{p:g}", lhs, rhs, 'report', 0.0, 's-limit-consistency',
            detail={'relative_gap': abs(lhs / rhs - 1.0)},
        ))
    return reports


# ---------------------------------------------------------------------------
# Mixed quantities
# ---------------------------------------------------------------------------

def check_af(spec: MixedSpec, label: str = 'mixed', tol: float = 0.01, geominimal: bool = False, centered: bool = False) -> List[VerdictReport]:
    """[mixed]^m <= prod of single areas, each side seeded with the other's optimiser."""
    run = mixed_orlicz_gm if geominimal else mixed_orlicz_as
    kind = 'gm' if geominimal else 'as'
    n, m = spec.dim, spec.m
    prefix = f"af/n{n}/{label}/{kind}"
    if spec.cls == PHI:
        singles = [run(spec.component(k)) for k in range(m)]
        mixed = run(spec, extras=[('singles', tuple(single.logs[0] for single in singles))])
    else:
        mixed = run(spec)
        singles = [run(spec.component(k), extras=[('mixed', (mixed.logs[k],))]) for k in range(m)]
    product = float(np.prod([single.value for single in singles]))
    reports = [verdict(
        f"{prefix}/product", mixed.value ** m, product, '<=', tol, 'alexandrov-fenchel',
        detail={'singles': [single.value for single in singles]},
    )]
    if centered and spec.cls == PHI and not geominimal:
        refs = []
        for k in range(m):
            Fb, ib = reference_weight(spec.F1s[k], spec.F2s[k], n)
            c_hat = (ib / spec.full[k].i2.value) ** (1.0 / n)
            refs.append(ellipsoid_as_reference(spec.hs[k], Fb, 1.0 / c_hat, n))
        reports.append(verdict(f"{prefix}/isoperimetric", mixed.value ** m, float(np.prod(refs)), '<=', tol, 'mixed-isoperimetric'))
    return reports


def check_partial_af(spec: MixedSpec, r: int, label: str = 'mixed', tol: float = 0.01) -> List[VerdictReport]:
    """Psi^m: [mixed]^r <= prod over k0 >= m - r of as(psi_0, ..., psi_{m-r-1}, psi_k0 repeated r times)."""
    m, n = spec.m, spec.dim
    if spec.cls == PHI:
        raise ValueError("The r-partial products are stated for Psi-type Orlicz functions")
    if not 1 <= r <= m:
        raise ValueError(f"r must lie in [1, {m}], got {r}")
    mixed = mixed_orlicz_as(spec)
    factors = []
    for k0 in range(m - r, m):
        order = list(range(m - r)) + [k0] * r
        seeded = tuple(mixed.logs[k] for k in order)
        factors.append(mixed_orlicz_as(spec.pick(order), extras=[('mixed', seeded)]).value)
    return [verdict(
        f"af-partial/n{n}/{label}/r{r}", mixed.value ** r, float(np.prod(factors)), '<=', tol, 'partial-alexandrov-fenchel',
        detail={'factors': factors},
    )]


def check_ith(spec: MixedSpec, label: str = 'mixed', tol: float = 0.01) -> List[VerdictReport]:
    """Degenerate i in {0, n} against single areas and, for n >= 2, the 0 < 1 < 2 interpolation."""
    n = spec.dim
    reports = []
    for i, k in ((0, 0), (n, 1)):
        value = ith_mixed_as(spec, i).value
        single = mixed_orlicz_as(spec.component(k)).value
        reports.append(verdict(f"ith/n{n}/{label}/i{i}", value, single, '=', tol, 'ith-degenerate'))
    if n >= 2 and spec.cls != PHI:
        middle = ith_mixed_as(spec, 1)
        seed = [('middle', middle.logs)]
        low = ith_mixed_as(spec, 0, extras=seed).value
        high = ith_mixed_as(spec, 2, extras=seed).value
        reports.append(verdict(f"ith/n{n}/{label}/0-1-2", middle.value ** 2, low * high, '<=', tol, 'ith-interpolation'))
    return reports


def default_mixed_specs(n: int, counts: Optional[int] = None) -> Dict[str, MixedSpec]:
    """Phi^2, Psi^2 and Psi^3 specs on centered quadratics."""
    gauss, aniso, wide = GaussianPotential(1.0, n), anisotropic_quadratic(n), GaussianPotential(1.3, n)
    phi, psi_h = power_h(1.0, n), H_REGISTRY['sqrt']()
    pair = (gauss, aniso)
    return {
        'phi-pair': MixedSpec(pair, (phi, phi), (WEIGHT,) * 2, (WEIGHT,) * 2, common_grid(pair, counts)),
        'phi-equal': MixedSpec((gauss, gauss), (phi, phi), (WEIGHT,) * 2, (WEIGHT,) * 2, common_grid((gauss,), counts)),
        'psi-pair': MixedSpec(pair, (psi_h, psi_h), (WEIGHT,) * 2, (WEIGHT,) * 2, common_grid(pair, counts)),
        'psi-triple': MixedSpec(
            (gauss, aniso, wide), (psi_h,) * 3, (WEIGHT,) * 3, (WEIGHT,) * 3, common_grid((gauss, aniso, wide), counts),
        ),
    }


# ---------------------------------------------------------------------------
# Suite configuration and runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestSuiteConfig:
    """What `run_suite` checks, on which dimensions, with which tolerances."""

    __test__ = False

    dims: Tuple[int, ...] = (1, 2)
    seed: int = DEFAULT_SEED
    transform_count: int = 10
    roster_size: int = 20
    grid_points: Dict[int, int] = field(default_factory=dict)
    s_values: Tuple[float, ...] = (0.25, 0.5)
    p_values: Tuple[float, ...] = (1.0, 2.0, -1.0)
    c_values: Tuple[float, ...] = (0.5, 1.0, 2.0)
    checks: Tuple[str, ...] = ALL_CHECKS
    tolerances: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ('dims', 's_values', 'p_values', 'c_values', 'checks'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        bad_dims = [n for n in self.dims if n not in (1, 2, 3)]
        if bad_dims:
            raise ValueError(f"Dimensions must be 1, 2 or 3, got {bad_dims}")
        unknown = [c for c in self.checks if c not in ALL_CHECKS]
        if unknown:
            raise ValueError(f"Unknown check(s) {unknown}; expected a subset of {ALL_CHECKS}")
        unknown = [k for k in self.tolerances if k not in DEFAULT_TOLERANCES]
        if unknown:
            raise ValueError(f"Unknown tolerance class(es) {unknown}; expected a subset of {sorted(DEFAULT_TOLERANCES)}")
        if any(v <= 0 for v in self.tolerances.values()):
            raise ValueError("Tolerances must be positive")
        if any(s <= 0 for s in self.s_values):
            raise ValueError("s values must be positive")
        if any(c <= 0 for c in self.c_values):
            raise ValueError("c values must be positive")
        if self.roster_size < 0 or self.transform_count < 0:
            raise ValueError("roster_size and transform_count must be non-negative")
        object.__setattr__(self, 'grid_points', {int(k): int(v) for k, v in self.grid_points.items()})

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def counts(self, n: int) -> Optional[int]:
        return self.grid_points.get(n)

    def to_record(self) -> dict:
        return {
            'dims': list(self.dims),
            'seed': self.seed,
            'transform_count': self.transform_count,
            'roster_size': self.roster_size,
            'grid_points': {str(k): v for k, v in sorted(self.grid_points.items())},
            's_values': list(self.s_values),
            'p_values': list(self.p_values),
            'c_values': list(self.c_values),
            'checks': list(self.checks),
            'tolerances': {k: self.tol(k) for k in sorted(DEFAULT_TOLERANCES)},
        }


@dataclass(frozen=True)
class Job:
    job_id: str
    provenance: str
    run: Callable[[], List[VerdictReport]]


def _jobs_for_dim(config: TestSuiteConfig, n: int) -> List[Job]:
    counts, seed = config.counts(n), config.seed
    gauss, aniso = GaussianPotential(1.0, n), anisotropic_quadratic(n)
    roster = logconcave_roster(n, max(config.roster_size, 1), seed)[:config.roster_size]
    featured = roster[:1] if roster else [('anisotropic', aniso)]
    t = config.tol
    jobs: List[Job] = []

    def add(check, job_id, provenance, fn):
        if check in config.checks:
            jobs.append(Job(f"{job_id}/n{n}", provenance, fn))

    add('scaling_law', 'scaling', 'scaling-law', lambda: check_scaling_law(n, tol=t('scaling')))
    add('legendre', 'legendre', 'legendre-duality', lambda: check_legendre(n, counts, t('legendre')))
    add('closed_forms', 'closed-forms', 'ellipsoid-closed-forms', lambda: check_closed_forms(n, config.c_values, counts, t('closed_form')))
    add('variational', 'variational', 'lp-variational-formula', lambda: check_variational(n, config.p_values, counts, t('variational')))

    invariance = (('orlicz_as', gauss), ('orlicz_gm', aniso), ('asp_direct', aniso), ('gp', aniso))
    for quantity, psi in invariance:
        add('invariance', f"invariance/{quantity}", 'orlicz-invariance',
            lambda q=quantity, f=psi: check_invariance(q, f, config.transform_count, seed, counts, t('invariance'), f.kind))
    add('invariance', 'invariance/asp_s_direct', 'orlicz-invariance',
        lambda: check_invariance('asp_s_direct', SEnvelope(S_INVARIANCE, 1.0, n), config.transform_count, seed, counts, t('invariance'), 'envelope'))
    add('gl_covariance', 'gl-covariance', 'gl-covariance',
        lambda: check_gl_covariance(1.0, aniso, seed, counts, t('invariance'), 'anisotropic'))

    for name, psi in [('gaussian', gauss), ('anisotropic', aniso)] + featured:
        add('bounds', f"bounds/{name}", 'orlicz-volume-bounds', lambda name=name, psi=psi: check_bounds(psi, name, counts, t('inequality')))

    add('blaschke_santalo', 'blaschke-santalo/quadratics', 'functional-blaschke-santalo', lambda: (
        check_bs(gauss, label='gaussian', counts=counts, tol=t('equality'), equality=True)
        + check_bs(aniso, label='anisotropic', counts=counts, tol=t('equality'), equality=True)
        + check_bs(aniso, PowerWeight(n + 2.0), PowerWeight(n + 2.0), 'anisotropic-power', counts, t('inequality'))
    ))
    for name, psi in roster:
        add('blaschke_santalo', f"blaschke-santalo/{name}", 'functional-blaschke-santalo',
            lambda name=name, psi=psi: check_bs(psi, label=name, counts=counts, tol=t('inequality')))

    iso_hs = (power_h(1.0, n), H_REGISTRY['square'](), H_REGISTRY['sqrt']())
    for name, psi in [('anisotropic', aniso)] + featured:
        equal = name == 'anisotropic'
        for h in iso_hs:
            add('isoperimetric', f"isoperimetric/{name}/{h.name}", 'orlicz-isoperimetric',
                lambda h=h, name=name, psi=psi, equal=equal: check_isoperimetric(
                    h, WEIGHT, WEIGHT, psi, name, counts, t('equality') if equal else t('inequality'), equality=equal and h.cls == PHI,
                ))
        for p in (1.0, -0.5 * n, -2.0 * n):
            add('lp_isoperimetric', f"lp-isoperimetric/{name}/p{p:g}", 'lp-isoperimetric',
                lambda p=p, name=name, psi=psi: check_lp_isoperimetric(p, WEIGHT, WEIGHT, psi, name, counts, t('inequality')))

    for tag in sorted(CYCLIC_CONDITIONS):
        name, psi = featured[0]
        add('cyclic', f"cyclic/{tag}", 'cyclic-inequalities',
            lambda tag=tag, name=name, psi=psi: check_cyclic(*cyclic_instance(tag, n), WEIGHT, WEIGHT, psi, tag, name, counts, t('inequality')))

    for name, psi in (('gaussian', gauss), ('anisotropic', aniso)):
        add('orlicz_santalo', f"orlicz-santalo/{name}", 'orlicz-santalo',
            lambda name=name, psi=psi: check_orlicz_santalo(power_h(1.0, n), WEIGHT, WEIGHT, psi, name, counts, t('santalo_product')))
        for p in (1.0, 2.0, -0.5 * n):
            add('santalo_product', f"santalo-product/{name}/p{p:g}", 'lp-santalo-product',
                lambda p=p, name=name, psi=psi: check_santalo_product(
                    p, WEIGHT, WEIGHT, psi, name, counts, t('santalo_product'), equality=name == 'gaussian',
                ))

    s_hs = (power_h(1.0, n), H_REGISTRY['sqrt'](), H_REGISTRY['inv1p']())
    for s in config.s_values:
        add('sconcave', f"sconcave/s{s:g}/closed-forms", 's-closed-forms',
            lambda s=s: check_s_closed_forms(n, s, config.c_values, (1.0, 2.0), counts, t('s_closed_form'), t('omega'), t('legendre')))
        for name, psi in sconcave_roster(n, s, seed):
            add('sconcave', f"sconcave/s{s:g}/{name}", 's-identity',
                lambda s=s, name=name, psi=psi: check_sconcave_suite(
                    sconcave.sconcave_pair(psi, s, grid=_grid(psi, counts)), s_hs,
                    _valid_ps(config.p_values, n), name, counts, t('s_closed_form'),
                ))
    add('sconcave', 's-limit', 's-limit-consistency', lambda: check_s_limit(n, (1.0, 2.0), counts))

    if 'af' in config.checks:
        specs = default_mixed_specs(n, counts)
        add('af', 'af/phi-pair', 'alexandrov-fenchel', lambda: (
            check_af(specs['phi-pair'], 'phi-pair', t('inequality'), centered=True)
            + check_af(specs['phi-pair'], 'phi-pair', t('inequality'), geominimal=True)
        ))
        add('af', 'af/phi-equal', 'alexandrov-fenchel', lambda: check_af(specs['phi-equal'], 'phi-equal', t('equality')))
        add('af', 'af/psi-pair', 'alexandrov-fenchel', lambda: check_af(specs['psi-pair'], 'psi-pair', t('inequality')))
        for r in (1, 2):
            add('af', f"af-partial/r{r}", 'partial-alexandrov-fenchel',
                lambda r=r: check_partial_af(specs['psi-triple'], r, 'psi-triple', t('inequality')))
        add('af', 'ith/psi-pair', 'ith-interpolation', lambda: check_ith(specs['psi-pair'], 'psi-pair', t('inequality')))
    return jobs


def build_jobs(config: TestSuiteConfig) -> List[Job]:
    jobs = []
    for n in config.dims:
        jobs.extend(_jobs_for_dim(config, n))
    return jobs


def _run_job(job: Job) -> List[VerdictReport]:
    start = time.perf_counter()
    try:
        reports = job.run()
    except Exception as exc:
        log('harness', f"{job.job_id} failed: {type(exc).__name__}: {exc}")
        reports = [VerdictReport(
            f"{job.job_id}/error", float('nan'), float('nan'), 'report', 0.0, float('nan'), 'fail', job.provenance,
            detail={'error': f"{type(exc).__name__}: {exc}"},
        )]
    elapsed = time.perf_counter() - start
    return [report.with_runtime(elapsed) for report in reports]


@dataclass(frozen=True)
class SuiteReport:
    reports: Tuple[VerdictReport, ...]
    config: TestSuiteConfig

    @property
    def counts(self) -> Dict[str, int]:
        tally = {'pass': 0, 'flagged': 0, 'fail': 0}
        for report in self.reports:
            tally[report.status] += 1
        return tally

    @property
    def exit_code(self) -> int:
        return 1 if self.counts['fail'] else 0

    @property
    def coverage(self) -> Dict[str, str]:
        covered = sorted({report.provenance for report in self.reports})
        return {key: COVERAGE[key] for key in covered}

    @property
    def skipped(self) -> Dict[str, str]:
        """Every named result without a report, with the reason."""
        covered = {report.provenance for report in self.reports}
        out = {}
        for key in COVERAGE:
            if key in covered:
                continue
            checks = COVERAGE_CHECKS[key]
            chosen = [c for c in checks if c in self.config.checks]
            if not chosen:
                out[key] = f"check {' / '.join(checks)} not selected"
            else:
                dims = ', '.join(str(n) for n in self.config.dims)
                out[key] = f"check {' / '.join(chosen)} produced no report for n in ({dims})"
        return out

    def header(self) -> dict:
        return {
            'coverage': self.coverage, 'skipped': self.skipped,
            'config': self.config.to_record(), 'counts': self.counts,
        }

    def to_jsonl(self, timings: bool = False) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines.extend(json.dumps(report.to_record(timings), sort_keys=True) for report in self.reports)
        return '\n'.join(lines) + '\n'

    def to_table(self, timings: bool = False) -> str:
        rows = ['=' * 60, f"Coverage: {', '.join(self.coverage) or 'none'}"]
        rows.extend(f"Skipped:  {key} ({reason})" for key, reason in self.skipped.items())
        rows.append('=' * 60)
        for report in self.reports:
            line = (
                f"{report.status.upper():8s} {report.check_id:60s} {report.relation:6s} "
                f"lhs={report.lhs:.6g} rhs={report.rhs:.6g} slack={report.slack:+.3e} tol={report.tolerance:.1e}"
            )
            if timings:
                line += f" {report.runtime:.2f}s"
            rows.append(line)
        counts = self.counts
        rows.append('=' * 60)
        rows.append(f"{counts['pass']} passed, {counts['flagged']} flagged, {counts['fail']} failed")
        return '\n'.join(rows) + '\n'


def run_suite(config: Optional[TestSuiteConfig] = None, workers: int = MAX_WORKERS) -> SuiteReport:
    """Run every configured check; report order depends only on check ids."""
    config = config if config is not None else TestSuiteConfig()
    jobs = build_jobs(config)
    log('harness', f"Running {len(jobs)} job(s) on {max(1, workers)} worker(s)")
    if not jobs:
        return SuiteReport((), config)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        batches = list(pool.map(_run_job, jobs))
    reports = sorted((r for batch in batches for r in batch), key=lambda r: r.check_id)
    suite = SuiteReport(tuple(reports), config)
    counts = suite.counts
    log('harness', f"{counts['pass']} passed, {counts['flagged']} flagged, {counts['fail']} failed")
    return suite
