"""Integrals over regular sets, radial integrals and the s-concave ball constant."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from affine_area.errors import ModeDisagreementError, NumericalError
from affine_area.funcrep import FunctionRep, Grid, RegularSet, regular_set
from affine_area.settings import debug, log

if TYPE_CHECKING:
    from affine_area.transforms import DualPair, SDualPair


EPS_CUT = 1e-12
CLIP_RATIO = 1e12
# Relative floor under the 3x error-estimate agreement test
MODE_REL_FLOOR = 1e-3
IDENTITY_REL_FLOOR = 5e-3

DualFunction = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Weight functions F: R -> (0, inf)
# ---------------------------------------------------------------------------

class WeightFunction(ABC):
    """Scalar weight F with the shape flags the inequalities depend on."""

    @abstractmethod
    def __call__(self, t: np.ndarray) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def is_decreasing(self) -> bool:
        ...

    @property
    @abstractmethod
    def is_logconcave(self) -> bool:
        ...

    @property
    def is_logconcave_radial(self) -> bool:
        """Whether F(|x|^2 / 2) is log-concave in x."""
        return self.is_logconcave and self.is_decreasing

    @abstractmethod
    def describe(self) -> str:
        ...


@dataclass(frozen=True)
class ExpNeg(WeightFunction):
    """t -> e^{-t}."""

    def __call__(self, t):
        return np.exp(-np.asarray(t, dtype=float))

    is_decreasing = True
    is_logconcave = True

    def describe(self):
        return 'exp'


@dataclass(frozen=True)
class PowerWeight(WeightFunction):
    """t -> (1 + t_+)^{-alpha}."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"Power weight needs alpha > 0, got {self.alpha}")

    def __call__(self, t):
        return (1.0 + np.maximum(np.asarray(t, dtype=float), 0.0)) ** (-self.alpha)

    is_decreasing = True
    is_logconcave = False

    def describe(self):
        return f"power:alpha={self.alpha:g}"


@dataclass(frozen=True)
class ConstOne(WeightFunction):
    """t -> 1; only integrable over bounded domains."""

    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    is_decreasing = True
    is_logconcave = True

    def describe(self):
        return 'one'


@dataclass(frozen=True)
class ScaledShifted(WeightFunction):
    """t -> b * base(t - a)."""

    base: WeightFunction
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError(f"Weight scale b must be positive, got {self.b}")

    def __call__(self, t):
        return self.b * self.base(np.asarray(t, dtype=float) - self.a)

    @property
    def is_decreasing(self):
        return self.base.is_decreasing

    @property
    def is_logconcave(self):
        return self.base.is_logconcave

    def describe(self):
        return f"scaled:base={self.base.describe()},a={self.a:g},b={self.b:g}"


@dataclass(frozen=True, eq=False)
class Tabulated(WeightFunction):
    """Log-linear interpolation through (knots, values).

    Left of the first knot the first value holds; right of the last knot the
    last log-slope continues (clamped to non-increasing).
    """

    knots: np.ndarray
    values: np.ndarray
    _log_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if knots.size < 2 or knots.size != values.size:
            raise ValueError("Tabulated weight needs at least two knots and one value per knot")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("Tabulated knots must be strictly increasing")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("Tabulated values must be finite and positive")
        object.__setattr__(self, 'knots', knots)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_log_values', np.log(values))

    @property
    def tail_slope(self) -> float:
        slope = (self._log_values[-1] - self._log_values[-2]) / (self.knots[-1] - self.knots[-2])
        return min(slope, 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inner = np.interp(t, self.knots, self._log_values)
        beyond = t > self.knots[-1]
        tail = self._log_values[-1] + self.tail_slope * (t - self.knots[-1])
        return np.exp(np.where(beyond, tail, inner))

    @property
    def is_decreasing(self):
        return bool(np.all(np.diff(self.values) <= 0))

    @property
    def is_logconcave(self):
        slopes = np.diff(self._log_values) / np.diff(self.knots)
        return bool(np.all(np.diff(slopes) <= 1e-9 * max(1.0, np.max(np.abs(slopes)))))

    def describe(self):
        return f"tabulated:{self.knots.size}knots"


# ---------------------------------------------------------------------------
# Results and reductions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegralResult:
    """Integral value with a one-refinement error estimate."""

    value: float
    est_error: float
    truncation_radius: float
    points_used: int
    clipped: float = 0.0
    clipped_points: int = 0

    def scaled(self, factor: float) -> 'IntegralResult':
        return IntegralResult(
            self.value * factor, self.est_error * abs(factor), self.truncation_radius,
            self.points_used, self.clipped * abs(factor), self.clipped_points,
        )

    def to_record(self) -> dict:
        record = {
            'value': self.value,
            'est_error': self.est_error,
            'truncation_radius': self.truncation_radius,
            'points_used': self.points_used,
        }
        if self.clipped_points:
            record['clipped'] = self.clipped
            record['clipped_points'] = self.clipped_points
        return record


@dataclass(frozen=True)
class ModeComparison:
    """Dual-side and pushforward values of the same integral."""

    dual_side: IntegralResult
    pushforward: IntegralResult

    @property
    def value(self) -> float:
        return self.pushforward.value

    @property
    def discrepancy(self) -> float:
        return abs(self.dual_side.value - self.pushforward.value)

    @property
    def tolerance(self) -> float:
        combined = 3.0 * (self.dual_side.est_error + self.pushforward.est_error)
        return max(combined, MODE_REL_FLOOR * max(self.dual_side.value, self.pushforward.value))

    def to_record(self) -> dict:
        return {
            'dual_side': self.dual_side.to_record(),
            'pushforward': self.pushforward.to_record(),
            'discrepancy': self.discrepancy,
        }


def tree_sum(values: np.ndarray) -> float:
    """Pairwise sum in a fixed order, padded to a power of two."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        return 0.0
    size = 1 << (arr.size - 1).bit_length()
    buf = np.zeros(size)
    buf[:arr.size] = arr
    while buf.size > 1:
        buf = buf[0::2] + buf[1::2]
    return float(buf[0])


@dataclass(frozen=True, eq=False)
class QuadratureSample:
    """Regular-set nodes carrying midpoint weights."""

    region: RegularSet

    def __len__(self) -> int:
        return len(self.region)

    @property
    def cell_volume(self) -> float:
        return self.region.grid.cell_volume

    @property
    def coarse(self) -> np.ndarray:
        return self.region.grid.coarse_mask[self.region.indices]

    def restrict(self, keep: np.ndarray) -> 'QuadratureSample':
        return QuadratureSample(self.region.restrict(keep))

    def total(self, integrand: np.ndarray, clip: bool = False, label: str = 'integral') -> IntegralResult:
        vals = np.asarray(integrand, dtype=float).reshape(-1)
        if vals.size != len(self):
            raise ValueError(f"{label}: integrand has {vals.size} values for {len(self)} nodes")
        bad = ~np.isfinite(vals)
        if bad.any():
            raise NumericalError(f"{label}: non-finite integrand at {int(bad.sum())} node(s)")
        if np.any(vals < 0):
            raise NumericalError(f"{label}: negative integrand (min {vals.min():.3e})")

        keep = np.ones(vals.size, dtype=bool)
        clipped, clipped_points = 0.0, 0
        if clip:
            # edge cells only, measured against the active interior
            boundary = self.region.boundary_mask()
            base = vals[~boundary] if (~boundary).any() else vals
            base = base[base > 0]
            if base.size:
                ref = float(np.median(base[base >= EPS_CUT * base.max()]))
                over = boundary & (vals > CLIP_RATIO * ref)
                if over.any():
                    clipped = tree_sum(vals[over]) * self.cell_volume
                    clipped_points = int(over.sum())
                    keep = ~over
                    log('quadrature', f"{label}: clipped {clipped_points} boundary cell(s), mass {clipped:.3e}")

        kept = vals[keep]
        if kept.size == 0 or kept.max() <= 0:
            raise NumericalError(f"{label}: integral is zero (positivity assumption violated)")
        active = keep & (vals >= EPS_CUT * kept.max())
        vol = self.cell_volume
        fine = tree_sum(vals[active]) * vol
        coarse = tree_sum(vals[active & self.coarse]) * vol * 2 ** self.region.grid.dim
        radius = float(np.max(np.linalg.norm(self.region.points[active], axis=1)))
        return IntegralResult(fine, abs(fine - coarse) / 3.0, radius, int(active.sum()), clipped, clipped_points)


def sample_regular(psi: FunctionRep, grid: Optional[Grid] = None, stencil: Optional[bool] = None) -> QuadratureSample:
    """Quadrature nodes for psi; closed forms use their exact domain by default."""
    if stencil is None:
        stencil = not psi.closed_form
    return QuadratureSample(regular_set(psi, grid, stencil=stencil))


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------

def integrate_weight(F: WeightFunction, psi: FunctionRep, grid: Optional[Grid] = None) -> IntegralResult:
    """I(F o psi, psi): midpoint sum of F(psi(x)) over X_psi."""
    sample = sample_regular(psi, grid)
    return sample.total(F(sample.region.values), label=f"I({F.describe()} o psi)")


def _compare(dual: IntegralResult, push: IntegralResult, label: str) -> ModeComparison:
    both = ModeComparison(dual, push)
    debug('quadrature', f"{label}: dual {dual.value:.6g} pushforward {push.value:.6g}")
    if both.discrepancy > both.tolerance:
        raise ModeDisagreementError(
            f"{label}: dual-side {dual.value:.6g} and pushforward {push.value:.6g} differ by "
            f"{both.discrepancy:.3e} (tolerance {both.tolerance:.3e}); refine the grid"
        )
    return both


def integrate_dual(g: DualFunction, pair: 'DualPair', mode: str = 'both'):
    """I(g, psi*) as a dual-side sum, a pushforward through grad psi, or both."""
    if mode not in ('dual_side', 'pushforward', 'both'):
        raise ValueError(f"Unknown integration mode {mode!r}")
    results = {}
    if mode in ('dual_side', 'both'):
        sample = sample_regular(pair.dual, pair.dual_grid)
        results['dual_side'] = sample.total(g(sample.region.points), label='I(g, psi*) dual')
    if mode in ('pushforward', 'both'):
        region = pair.primal_sample.region
        integrand = g(region.gradients) * region.hess_dets
        results['pushforward'] = pair.primal_sample.total(integrand, label='I(g, psi*) pushforward')
    if mode == 'both':
        return _compare(results['dual_side'], results['pushforward'], 'I(g, psi*)')
    return results[mode]


def _sphere_area(n: int) -> float:
    return float(np.exp(np.log(2.0) + 0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def radial_integral(F: WeightFunction, c: float, n: int, radius: Optional[float] = None) -> IntegralResult:
    """I(F, c) = integral over R^n (or the ball of `radius`) of F(c^2 |x|^2 / 2)."""
    if c <= 0:
        raise ValueError(f"Radial scale c must be positive, got {c}")
    if n < 1:
        raise ValueError(f"Dimension must be at least 1, got {n}")

    def integrand(r):
        return float(F(0.5 * c * c * r * r)) * r ** (n - 1)

    if radius is None:
        far, farther = 1e3 / c, 1e4 / c
        if integrand(farther) * farther >= integrand(far) * far > 0:
            raise NumericalError(f"I({F.describe()}, c) diverges: tail does not decay faster than r^-n")

    # Break points where the integrand changes character
    breaks = [0.0, 4.0 / c, 16.0 / c]
    if isinstance(F, Tabulated):
        breaks.append(float(np.sqrt(2.0 * max(F.knots[-1], 0.0))) / c)
    upper = np.inf if radius is None else float(radius)
    breaks = sorted({b for b in breaks if b < upper}) + [upper]

    value, err, evals = 0.0, 0.0, 0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        out = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200, full_output=1)
        value += out[0]
        err += out[1]
        evals += out[2]['neval']
        if len(out) > 3:
            debug('quadrature', f"radial integral on [{lo:g}, {hi:g}]: {out[3]}")
    if not np.isfinite(value):
        raise NumericalError(f"I({F.describe()}, c) is not finite")
    area = _sphere_area(n)
    return IntegralResult(area * value, area * err, upper, evals)


def omega_ns(n: int, s: float) -> float:
    """Volume-like constant of k_s(x) = [(1 - s|x|^2)_+]^{1/(2s)}."""
    if n < 1 or s <= 0:
        raise ValueError(f"omega_ns needs n >= 1 and s > 0, got n={n}, s={s}")
    log_val = 0.5 * n * np.log(np.pi / s) + gammaln(1.0 + 0.5 / s) - gammaln(1.0 + 0.5 * n + 0.5 / s)
    return float(np.exp(log_val))


def integrate_s(g: DualFunction, sp: 'SDualPair', mode: str = 'both'):
    """I_s(g, psi*_(s)): dual-side sum or pushforward through T_psi with the s-Jacobian."""
    if mode not in ('dual_side', 'pushforward', 'both'):
        raise ValueError(f"Unknown integration mode {mode!r}")
    results = {}
    if mode in ('dual_side', 'both'):
        sample = sample_regular(sp.dual, sp.dual_grid)
        results['dual_side'] = sample.total(g(sample.region.points), clip=True, label='I_s(g) dual')
    if mode in ('pushforward', 'both'):
        integrand = g(sp.tmap_samples) * sp.jacobian
        results['pushforward'] = sp.sample.total(integrand, clip=True, label='I_s(g) pushforward')
    if mode == 'both':
        return _compare(results['dual_side'], results['pushforward'], 'I_s(g)')
    return results[mode]


@dataclass(frozen=True)
class FIntegral:
    """I(f) of an s-concave f, directly and through the (1 + ns) identity."""

    direct: IntegralResult
    identity: IntegralResult
    s: float
    dim: int

    @property
    def value(self) -> float:
        return self.direct.value

    @property
    def discrepancy(self) -> float:
        return abs(self.direct.value - self.identity.value)

    @property
    def tolerance(self) -> float:
        combined = 3.0 * (self.direct.est_error + self.identity.est_error)
        return max(combined, IDENTITY_REL_FLOOR * self.direct.value)

    @property
    def agrees(self) -> bool:
        return self.discrepancy <= self.tolerance

    def to_record(self) -> dict:
        return {
            'direct': self.direct.to_record(),
            'identity': self.identity.to_record(),
            'discrepancy': self.discrepancy,
        }


def integral_f_s(sp: 'SDualPair', strict: bool = True) -> FIntegral:
    """I(f) for f = (1 - s psi)^{1/s}, cross-checked by the psi-tilde identity."""
    s, n = sp.s, sp.primal.dim
    u = sp.u_samples
    direct = sp.sample.total(u ** (1.0 / s), label='I(f) direct')
    via = sp.sample.total(u ** (1.0 / s - 1.0) * sp.psitilde_samples, clip=True, label='I(f) identity')
    result = FIntegral(direct, via.scaled(1.0 / (1.0 + n * s)), s, n)
    if strict and not result.agrees:
        raise ModeDisagreementError(
            f"I(f) direct {direct.value:.6g} and identity {result.identity.value:.6g} differ by "
            f"{result.discrepancy:.3e} (tolerance {result.tolerance:.3e})"
        )
    return result
