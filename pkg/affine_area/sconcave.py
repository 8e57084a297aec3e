"""Orlicz and L_p affine / geominimal surface areas of s-concave functions f = (1 - s psi)^{1/s}."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from affine_area.funcrep import (
    AffineComposite,
    FunctionRep,
    Grid,
    Quadratic,
    SEnvelope,
    SumRep,
    scaled_envelope,
)
from affine_area.orlicz_core import (
    PHI,
    TINY,
    CandidateFamily,
    Chart,
    OrliczFunction,
    VariationalResult,
    Witness,
    default_families,
    gaussian_layout,
    gaussian_log,
    gaussian_seeds,
    power_h,
    run_candidates,
)
from affine_area.quadrature import IntegralResult, integral_f_s, omega_ns, tree_sum
from affine_area.settings import debug
from affine_area.transforms import SDualPair, s_dual


@dataclass(frozen=True, eq=False)
class SConcavePair:
    """An s-concave f = (1 - s psi)^{1/s} with its s-dual data."""

    s: float
    psi: FunctionRep
    sdual: SDualPair
    regularity_flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.psi.dim

    def f(self, x: np.ndarray) -> np.ndarray:
        vals = self.psi.values(x)
        with np.errstate(invalid='ignore'):
            return np.where(np.isfinite(vals) & (1.0 - self.s * vals > 0), np.abs(1.0 - self.s * vals) ** (1.0 / self.s), 0.0)

    @property
    def u(self) -> np.ndarray:
        return self.sdual.u_samples

    @property
    def psitilde(self) -> np.ndarray:
        return self.sdual.psitilde_samples

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.u.size, self.sdual.sample.cell_volume)

    def integral(self, values: np.ndarray) -> float:
        return tree_sum(values) * self.sdual.sample.cell_volume

    def is_envelope(self) -> bool:
        psi = self.psi
        if isinstance(psi, SEnvelope):
            return np.isclose(psi.s, self.s)
        return isinstance(psi, AffineComposite) and psi.is_linear and isinstance(psi.base, SEnvelope) and np.isclose(psi.base.s, self.s)


def sconcave_pair(
    psi: FunctionRep, s: float, grid: Optional[Grid] = None, dual_grid: Optional[Grid] = None,
) -> SConcavePair:
    """Pair psi with its s-dual; requires 0 in S_f, i.e. psi(0) < 1/s."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    at_origin = float(psi.values(np.zeros((1, psi.dim)))[0])
    if not s * at_origin < 1.0:
        raise ValueError(f"psi(0) = {at_origin:g} is not below 1/s = {1.0 / s:g}: 0 is outside S_f")
    sd = s_dual(psi, s, dual_grid=dual_grid, primal_grid=grid)
    u = sd.u_samples
    flags = {
        'C2_interior': bool(np.all(np.isfinite(sd.sample.region.hessians))),
        'boundary_decay': bool(u.min() < 0.1 * u.max()),
    }
    return SConcavePair(s, psi, sd, flags)


def swap(sp: SConcavePair) -> SConcavePair:
    """The pair with the roles of psi and psi*_(s) exchanged."""
    return sconcave_pair(sp.sdual.dual, sp.s, grid=sp.sdual.dual_grid)


def perturbed_envelope(s: float, A: np.ndarray, eps: float) -> FunctionRep:
    """Ellipsoidal envelope potential plus (eps/s)|x|^2: the randomised s-concave roster member."""
    env = scaled_envelope(s, A)
    if eps == 0:
        return env
    return SumRep((env, Quadratic((eps / s) * np.eye(env.dim))))


# ---------------------------------------------------------------------------
# Direct functionals
# ---------------------------------------------------------------------------

def _g_at_tmap(g, sp: SConcavePair) -> np.ndarray:
    vals = np.asarray(g(sp.sdual.tmap_samples), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("g must be finite and positive on T_psi(X_psi)")
    return vals


def _vs_integrand(h: Callable, sp: SConcavePair, gvals: np.ndarray) -> np.ndarray:
    s = sp.s
    u, pt = sp.u, sp.psitilde
    if np.any(pt <= 0):
        raise ValueError("psi-tilde <= 0 encountered")
    arg = np.maximum(gvals * pt ** (1.0 / s - 1.0) * u, TINY)
    return h(arg) * pt * u ** (1.0 / s - 1.0)


def v_s(h: OrliczFunction, sp: SConcavePair, g) -> float:
    """V_h^(s)(psi, g) = int h(g(T psi) psi~^{1/s-1} (1 - s psi)) psi~ (1 - s psi)^{1/s-1} dx."""
    return sp.sdual.sample.total(_vs_integrand(h, sp, _g_at_tmap(g, sp)), clip=True, label='V_h^(s)').value


def asp_s_direct(p: float, sp: SConcavePair) -> float:
    """L_p affine surface area of f by its direct integral formula."""
    n, s = sp.dim, sp.s
    if p == -n:
        raise ValueError("p = -n is excluded")
    det = sp.sdual.sample.region.hess_dets
    a = p / (n + p)
    integrand = sp.u ** ((1.0 / s - 1.0) * n / (n + p)) * det ** a / sp.psitilde ** (a * (n + 1.0 / s + 1.0) - 1.0)
    return sp.sdual.sample.total(integrand, clip=True, label='as_p^(s)').value / (1.0 + n * s)


def integral_f(sp: SConcavePair) -> float:
    """I(f), taken from the direct/identity pair (identity checked)."""
    return integral_f_s(sp.sdual).value


def integral_polar(sp: SConcavePair) -> IntegralResult:
    """I(f°_(s)) by pushforward: (1 - s psi*_(s)(T x))^{1/s} = psi~(x)^{-1/s}."""
    return sp.sdual.sample.total(sp.psitilde ** (-1.0 / sp.s) * sp.sdual.jacobian, clip=True, label='I(f polar)')


def i_s(sp: SConcavePair, g_values: np.ndarray) -> float:
    """I_s(g, psi*_(s)) by pushforward from g values at T_psi(x)."""
    return sp.integral(g_values * sp.sdual.jacobian)


def g0_s_witness(p: float, sp: SConcavePair) -> Witness:
    """Optimiser of the L_p variational formula, given at T_psi(x)."""
    n, s = sp.dim, sp.s
    det = sp.sdual.sample.region.hess_dets
    inner = sp.u ** (1.0 / s - 2.0 - p / n) * sp.psitilde ** (n + 2.0 - p / (n * s) + p / n) / det
    return Witness('g0_s', inner ** (n / (n + p)))


def g1_witness(sp: SConcavePair) -> Witness:
    """g1(y) = (1 - s psi*)^{1/s-1} (1 + s<grad psi*, y> - s psi*) on the dual,
    equal to psi~^{1-1/s} / (1 - s psi) at y = T_psi(x)."""
    s = sp.s
    primal = sp.psitilde ** (1.0 - 1.0 / s) / sp.u
    dual = sp.sdual.dual

    def dual_fn(y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        vals = dual.values(y)
        grad = dual.gradients(y)
        with np.errstate(invalid='ignore'):
            return (1.0 - s * vals) ** (1.0 / s - 1.0) * (1.0 + s * np.einsum('mi,mi->m', grad, y) - s * vals)

    with np.errstate(invalid='ignore'):
        check = dual_fn(sp.sdual.tmap_samples)
    ok = np.isfinite(check) & (check > 0)
    agreement = float(np.max(np.abs(check[ok] - primal[ok]) / primal[ok])) if ok.any() else float('nan')
    return Witness('g1', primal, dual_fn, agreement)


def g2_witness(sp: SConcavePair) -> Witness:
    """g1 of the swapped pair; it is the base candidate when psi*_(s) is the input."""
    w = g1_witness(swap(sp))
    return Witness('g2', w.on_sample, w.dual_fn, w.agreement)


def g1_is_logconcave(sp: SConcavePair) -> bool:
    """Envelopes: exactly when s <= 1/2. Otherwise log g1 is tested for axis concavity on the dual grid."""
    if sp.is_envelope():
        return sp.s <= 0.5
    grid = sp.sdual.dual_grid
    with np.errstate(invalid='ignore', divide='ignore'):
        vals = np.log(g1_witness(sp).dual_fn(grid.points)).reshape(grid.shape)
    for axis in range(grid.dim):
        lo = np.take(vals, range(0, grid.shape[axis] - 2), axis=axis)
        mid = np.take(vals, range(1, grid.shape[axis] - 1), axis=axis)
        hi = np.take(vals, range(2, grid.shape[axis]), axis=axis)
        second = lo + hi - 2 * mid
        second = second[np.isfinite(second)]
        if second.size and second.max() > 1e-6 * max(1.0, np.max(np.abs(vals[np.isfinite(vals)]))):
            return False
    return True


# ---------------------------------------------------------------------------
# Variational functionals
# ---------------------------------------------------------------------------

def s_target(sp: SConcavePair) -> float:
    return (1.0 + sp.dim * sp.s) * omega_ns(sp.dim, sp.s)


def _s_charts(sp: SConcavePair, families: Sequence[CandidateFamily], logconcave_only: bool) -> List[Chart]:
    y = sp.sdual.tmap_samples
    n = sp.dim
    base = np.log(np.maximum(g1_witness(sp).on_sample, TINY))
    charts = []
    for family in families:
        if family.kind == 'base':
            if logconcave_only and not g1_is_logconcave(sp):
                debug('sconcave', 'skipping scaled g1: not log-concave for this s')
                continue
            charts.append(Chart('g1', 0, lambda theta: base, (np.zeros(0),), True))
        elif family.kind == 'gaussian':
            size, _ = gaussian_layout(n)
            seeds = gaussian_seeds(y, np.exp(base - base.max()) * sp.sdual.jacobian)
            charts.append(Chart('gaussian', size, lambda theta: gaussian_log(theta, y), seeds, True))
        else:
            if logconcave_only:
                raise ValueError("A log-concave-only problem cannot use the perturbation family")
            sq = np.sum(y ** 2, axis=1)
            charts.append(Chart(
                'perturbation', n + 1, lambda theta: base + y @ theta[:n] - theta[n] ** 2 * sq,
                (np.zeros(n + 1),), False,
            ))
    return charts


def _envelope_extra(sp: SConcavePair):
    """c^{-n} [(1 - s|y|^2/c^2)_+]^{1/(2s)-1} at y = T x = c^2 x, for plain envelopes."""
    psi = sp.psi
    if not (isinstance(psi, SEnvelope) and np.isclose(psi.s, sp.s)):
        return []
    y = sp.sdual.tmap_samples
    c, n, s = psi.c, sp.dim, sp.s
    slack = np.maximum(1.0 - s * np.sum(y ** 2, axis=1) / c ** 2, TINY)
    return [('envelope', -n * np.log(c) + (0.5 / s - 1.0) * np.log(slack))]


def _lp_s_objective(p: float, sp: SConcavePair):
    n, s = sp.dim, sp.s
    h = lambda t: t ** (-p / n)

    def objective(log_g):
        g = np.maximum(np.exp(log_g - np.max(log_g)), TINY)
        V = sp.integral(_vs_integrand(h, sp, g))
        I = i_s(sp, g)
        if not (np.isfinite(V) and np.isfinite(I)) or V <= 0 or I <= 0:
            return np.nan
        return float(np.exp((n / (n + p)) * np.log(V) + (p / (n + p)) * np.log(I))) / (1.0 + n * s)

    return objective


def asp_s_variational(
    p: float, sp: SConcavePair,
    families: Optional[Sequence[CandidateFamily]] = None,
    inject_witness: bool = True,
) -> VariationalResult:
    """(1/(1+ns)) opt_g V_p^(s)(psi, g)^{n/(n+p)} I_s(g)^{p/(n+p)}: inf for p >= 0, sup for p < 0."""
    n = sp.dim
    if p == -n:
        raise ValueError("p = -n is excluded")
    direct = asp_s_direct(p, sp)
    if p == 0:
        value = integral_f(sp)
        return VariationalResult(value, {'family': 'any', 'params': []}, 0).with_gap(direct)
    families = families if families is not None else default_families(False)
    extras = []
    if inject_witness:
        extras.append(('g0_s', np.log(np.maximum(g0_s_witness(p, sp).on_sample, TINY))))
    result = run_candidates(
        _lp_s_objective(p, sp), _s_charts(sp, families, False), 'min' if p > 0 else 'max',
        extras, label='asp_s_variational',
    )
    result.diagnostics['asp_s_direct'] = direct
    return result.with_gap(direct)


def _orlicz_s_objective(h: OrliczFunction, sp: SConcavePair, target: float):
    def objective(log_g):
        g = np.exp(log_g - np.max(log_g))
        I = i_s(sp, g)
        if not np.isfinite(I) or I <= 0:
            return np.nan
        return sp.integral(_vs_integrand(h, sp, target * g / I))
    return objective


def _orlicz_s(h, sp, families, logconcave_only, reference, label) -> VariationalResult:
    families = families if families is not None else default_families(logconcave_only)
    target = next((f.target for f in families if f.target is not None), s_target(sp))
    result = run_candidates(
        _orlicz_s_objective(h, sp, target), _s_charts(sp, families, logconcave_only),
        'min' if h.cls == PHI else 'max', _envelope_extra(sp), label=label,
    )
    result.diagnostics['as_bound'] = as_s_bound(h, sp)
    return result.with_gap(reference)


def orlicz_as_s(
    h: OrliczFunction, sp: SConcavePair,
    families: Optional[Sequence[CandidateFamily]] = None, reference: Optional[float] = None,
) -> VariationalResult:
    """Orlicz L_h^(s) affine surface area, normalised to I_s(g) = (1+ns) omega_{n,s}."""
    return _orlicz_s(h, sp, families, False, reference, 'orlicz_as_s')


def orlicz_gm_s(
    h: OrliczFunction, sp: SConcavePair,
    families: Optional[Sequence[CandidateFamily]] = None, reference: Optional[float] = None,
) -> VariationalResult:
    """Orlicz L_h^(s) geominimal surface area: log-concave g only."""
    return _orlicz_s(h, sp, families, True, reference, 'orlicz_gm_s')


def gp_s(
    p: float, sp: SConcavePair,
    families: Optional[Sequence[CandidateFamily]] = None,
    cross_check: bool = True, reference: Optional[float] = None,
) -> VariationalResult:
    """L_p geominimal surface area of f over log-concave g, cross-checked through orlicz_gm_s."""
    n, s = sp.dim, sp.s
    if p == -n:
        raise ValueError("p = -n is excluded")
    if p == 0:
        return VariationalResult(integral_f(sp), {'family': 'any', 'params': []}, 0).with_gap(reference)
    families = families if families is not None else default_families(True)
    charts = _s_charts(sp, families, True)
    result = run_candidates(
        _lp_s_objective(p, sp), charts, 'min' if p > 0 else 'max', _envelope_extra(sp), label='gp_s',
    )
    if cross_check:
        gm = orlicz_gm_s(power_h(p, n), sp, families)
        omega = omega_ns(n, s)
        via = omega ** (p / (n + p)) * (gm.value / (1.0 + n * s)) ** (n / (n + p))
        result.diagnostics['orlicz_gm_route'] = via
        result.diagnostics['route_discrepancy'] = abs(via - result.value) / abs(result.value)
    return result.with_gap(reference)


# ---------------------------------------------------------------------------
# Bounds, constants and closed forms
# ---------------------------------------------------------------------------

def as_s_bound(h: OrliczFunction, sp: SConcavePair) -> float:
    """(1+ns) I(f) h(omega_{n,s} / I(f°_(s))), the scaled-g1 candidate's value."""
    n, s = sp.dim, sp.s
    i_f = integral_f_s(sp.sdual, strict=False).value
    return float((1.0 + n * s) * i_f * h(np.array(omega_ns(n, s) / integral_polar(sp).value)))


def c_s(sp: SConcavePair) -> float:
    """(I(f°_(s)) / omega_{n,s})^{1/n}."""
    return float((integral_polar(sp).value / omega_ns(sp.dim, sp.s)) ** (1.0 / sp.dim))


def c_bar_s(sp: SConcavePair) -> float:
    """(omega_{n,s} / I(f))^{1/n}."""
    i_f = integral_f_s(sp.sdual, strict=False).value
    return float((omega_ns(sp.dim, sp.s) / i_f) ** (1.0 / sp.dim))


def envelope_as_reference(h: OrliczFunction, s: float, c: float, n: int) -> float:
    """orlicz_as_s of the envelope potential with parameter c."""
    return float((1.0 + n * s) * c ** (-n) * omega_ns(n, s) * h(np.array(c ** (-n))))


def envelope_gp_reference(p: float, s: float, c: float, n: int) -> float:
    return float(c ** (n * (p - n) / (n + p)) * omega_ns(n, s))
