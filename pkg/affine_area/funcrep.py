"""Convex function representations, their pointwise calculus and the regular set X_psi."""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from affine_area.errors import EmptyRegionError
from affine_area.settings import grid_points


EPS_DET_REL = 1e-10
EPS_SYM_REL = 1e-8
EPS_CVX_REL = 1e-6
# |det T| below this is treated as singular
EPS_SINGULAR = 1e-10
# Closed-form boxes cover {psi - min psi <= PSI_CUT}; e^-32 is below the 1e-12 integrand cut
PSI_CUT = 32.0

Box = Tuple[np.ndarray, np.ndarray]


def _as_points(x: np.ndarray, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if dim > 1 or pts.size == 1 else pts.reshape(-1, 1)
    if pts.shape[-1] != dim:
        raise ValueError(f"Expected points of dimension {dim}, got shape {pts.shape}")
    return pts


@dataclass(frozen=True, eq=False)
class Grid:
    """Axis-aligned box sampled uniformly; node i of an axis sits at lower + i * spacing."""

    lower: np.ndarray
    upper: np.ndarray
    counts: Tuple[int, ...]

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(counts) == 1 and lower.size > 1:
            counts = counts * lower.size
        if lower.shape != upper.shape or len(counts) != lower.size:
            raise ValueError(f"Grid bounds {lower} / {upper} do not match counts {counts}")
        if np.any(lower >= upper):
            raise ValueError(f"Grid lower bound {lower} must lie below upper bound {upper}")
        if min(counts) < 5:
            raise ValueError(f"Grid needs at least 5 samples per axis, got {counts}")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'counts', counts)

    @classmethod
    def cube(cls, radius: float, dim: int, count: int) -> 'Grid':
        return cls(-radius * np.ones(dim), radius * np.ones(dim), (count,) * dim)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (np.asarray(self.counts) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> list:
        return [np.linspace(lo, hi, c) for lo, hi, c in zip(self.lower, self.upper, self.counts)]

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def coarse_mask(self) -> np.ndarray:
        """Nodes of the doubled-spacing grid (every index even)."""
        idx = np.indices(self.counts).reshape(self.dim, -1)
        return np.all(idx % 2 == 0, axis=0)

    def same_as(self, other: 'Grid') -> bool:
        return (
            self.counts == other.counts
            and np.allclose(self.lower, other.lower)
            and np.allclose(self.upper, other.upper)
        )

    def describe(self) -> dict:
        return {
            'lower': [float(v) for v in self.lower],
            'upper': [float(v) for v in self.upper],
            'counts': list(self.counts),
        }


class FunctionRep(ABC):
    """A convex function on R^n, +inf outside its domain.

    Vectorised methods take points of shape (M, n).
    """

    closed_form = True

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def values(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def gradients(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hessians(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def natural_box(self) -> Box:
        """Box holding the part of the domain that matters for integrals."""

    def conjugate(self) -> Optional['FunctionRep']:
        """Closed-form Legendre transform, when one exists."""
        return None

    def s_conjugate(self, s: float) -> Optional['FunctionRep']:
        """Closed-form s-concave dual, when one exists."""
        return None

    @property
    def kind(self) -> str:
        return type(self).__name__

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class Quadratic(FunctionRep):
    """psi(x) = <Ax, x> + a, so the Hessian is 2A."""

    A: np.ndarray
    a: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"Quadratic matrix must be square, got shape {A.shape}")
        if np.max(np.abs(A - A.T)) > EPS_SYM_REL * max(1.0, np.max(np.abs(A))):
            raise ValueError("Quadratic matrix must be symmetric")
        A = 0.5 * (A + A.T)
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ValueError("Quadratic matrix must be positive definite")
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'a', float(self.a))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def values(self, x):
        x = _as_points(x, self.dim)
        return np.einsum('mi,ij,mj->m', x, self.A, x) + self.a

    def gradients(self, x):
        return 2.0 * _as_points(x, self.dim) @ self.A

    def hessians(self, x):
        x = _as_points(x, self.dim)
        return np.broadcast_to(2.0 * self.A, (x.shape[0], self.dim, self.dim)).copy()

    def natural_box(self):
        half = np.sqrt(PSI_CUT * np.diag(np.linalg.inv(self.A)))
        return -half, half

    def conjugate(self):
        return Quadratic(np.linalg.inv(self.A) / 4.0, -self.a)

    def describe(self):
        return f"quad:A={self.A.tolist()},a={self.a:g}"


@dataclass(frozen=True, eq=False)
class GaussianPotential(FunctionRep):
    """psi(x) = c^2 |x|^2 / 2, the potential of the Gaussian scaled by c."""

    c: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"GaussianPotential needs c > 0, got {self.c}")
        if self.n < 1:
            raise ValueError(f"Dimension must be at least 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n

    def values(self, x):
        x = _as_points(x, self.dim)
        return 0.5 * self.c ** 2 * np.einsum('mi,mi->m', x, x)

    def gradients(self, x):
        return self.c ** 2 * _as_points(x, self.dim)

    def hessians(self, x):
        x = _as_points(x, self.dim)
        return np.broadcast_to(self.c ** 2 * np.eye(self.dim), (x.shape[0], self.dim, self.dim)).copy()

    def natural_box(self):
        half = np.sqrt(2.0 * PSI_CUT) / self.c * np.ones(self.dim)
        return -half, half

    def conjugate(self):
        return GaussianPotential(1.0 / self.c, self.n)

    def describe(self):
        return f"gaussian:c={self.c:g},n={self.n}"


@dataclass(frozen=True, eq=False)
class SEnvelope(FunctionRep):
    """Potential (1 - sqrt(1 - s c^2 |x|^2)) / s of the s-concave envelope on |x| < 1/(c sqrt(s))."""

    s: float
    c: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.s <= 0 or self.c <= 0:
            raise ValueError(f"SEnvelope needs s > 0 and c > 0, got s={self.s}, c={self.c}")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def radius(self) -> float:
        return 1.0 / (self.c * np.sqrt(self.s))

    def _slack(self, x):
        return 1.0 - self.s * self.c ** 2 * np.einsum('mi,mi->m', x, x)

    def values(self, x):
        x = _as_points(x, self.dim)
        slack = self._slack(x)
        out = np.full(x.shape[0], np.inf)
        inside = slack > 0
        out[inside] = (1.0 - np.sqrt(slack[inside])) / self.s
        return out

    def gradients(self, x):
        x = _as_points(x, self.dim)
        slack = self._slack(x)
        root = np.sqrt(np.where(slack > 0, slack, np.nan))
        return self.c ** 2 * x / root[:, None]

    def hessians(self, x):
        x = _as_points(x, self.dim)
        slack = np.where(self._slack(x) > 0, self._slack(x), np.nan)
        eye = np.eye(self.dim)[None, :, :] * (self.c ** 2 / np.sqrt(slack))[:, None, None]
        outer = np.einsum('mi,mj->mij', x, x) * (self.s * self.c ** 4 / slack ** 1.5)[:, None, None]
        return eye + outer

    def natural_box(self):
        half = self.radius * np.ones(self.dim)
        return -half, half

    def s_conjugate(self, s):
        if np.isclose(s, self.s):
            return SEnvelope(self.s, 1.0 / self.c, self.n)
        return None

    def describe(self):
        return f"senv:s={self.s:g},c={self.c:g},n={self.n}"


@dataclass(frozen=True, eq=False)
class QuarticBump(FunctionRep):
    """eps * |x - v|^4, a smooth convex perturbation term."""

    eps: float
    center: np.ndarray

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"QuarticBump needs eps > 0, got {self.eps}")
        object.__setattr__(self, 'center', np.atleast_1d(np.asarray(self.center, dtype=float)))

    @property
    def dim(self) -> int:
        return self.center.size

    def values(self, x):
        d = _as_points(x, self.dim) - self.center
        return self.eps * np.einsum('mi,mi->m', d, d) ** 2

    def gradients(self, x):
        d = _as_points(x, self.dim) - self.center
        return 4.0 * self.eps * np.einsum('mi,mi->m', d, d)[:, None] * d

    def hessians(self, x):
        d = _as_points(x, self.dim) - self.center
        r2 = np.einsum('mi,mi->m', d, d)
        eye = np.eye(self.dim)[None, :, :] * (4.0 * self.eps * r2)[:, None, None]
        return eye + 8.0 * self.eps * np.einsum('mi,mj->mij', d, d)

    def natural_box(self):
        half = (PSI_CUT / self.eps) ** 0.25
        return self.center - half, self.center + half

    def describe(self):
        return f"bump:eps={self.eps:g},v={self.center.tolist()}"


@dataclass(frozen=True, eq=False)
class SumRep(FunctionRep):
    """Pointwise sum of convex terms."""

    terms: Tuple[FunctionRep, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("SumRep needs at least one term")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise ValueError(f"SumRep terms disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, 'terms', terms)

    @property
    def closed_form(self) -> bool:
        return all(t.closed_form for t in self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def values(self, x):
        return sum(t.values(x) for t in self.terms)

    def gradients(self, x):
        return sum(t.gradients(x) for t in self.terms)

    def hessians(self, x):
        return sum(t.hessians(x) for t in self.terms)

    def natural_box(self):
        boxes = [t.natural_box() for t in self.terms]
        lower = np.max([b[0] for b in boxes], axis=0)
        upper = np.min([b[1] for b in boxes], axis=0)
        if np.any(lower >= upper):
            raise ValueError("SumRep terms have disjoint natural boxes")
        return lower, upper

    @property
    def kind(self) -> str:
        return '+'.join(t.kind for t in self.terms)

    def describe(self):
        return ' + '.join(t.describe() for t in self.terms)


@dataclass(frozen=True, eq=False)
class AffineComposite(FunctionRep):
    """x -> scale * base(T x + shift) + <tilt, x> + offset.

    Closed under Legendre duality whenever the base has a closed-form conjugate.
    """

    base: FunctionRep
    T: np.ndarray
    shift: Optional[np.ndarray] = None
    tilt: Optional[np.ndarray] = None
    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        n = self.base.dim
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        if T.shape != (n, n):
            raise ValueError(f"Composition matrix must be {n}x{n}, got {T.shape}")
        if abs(np.linalg.det(T)) <= EPS_SINGULAR:
            raise ValueError("Composition matrix is singular")
        if self.scale <= 0:
            raise ValueError(f"Output scale must be positive, got {self.scale}")
        shift = np.zeros(n) if self.shift is None else np.asarray(self.shift, dtype=float).reshape(n)
        tilt = np.zeros(n) if self.tilt is None else np.asarray(self.tilt, dtype=float).reshape(n)
        object.__setattr__(self, 'T', T)
        object.__setattr__(self, 'shift', shift)
        object.__setattr__(self, 'tilt', tilt)
        object.__setattr__(self, 'offset', float(self.offset))
        object.__setattr__(self, 'scale', float(self.scale))

    @property
    def closed_form(self) -> bool:
        return self.base.closed_form

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def is_linear(self) -> bool:
        return (
            not np.any(self.shift) and not np.any(self.tilt)
            and self.offset == 0.0 and self.scale == 1.0
        )

    def _inner(self, x):
        return _as_points(x, self.dim) @ self.T.T + self.shift

    def values(self, x):
        x = _as_points(x, self.dim)
        return self.scale * self.base.values(self._inner(x)) + x @ self.tilt + self.offset

    def gradients(self, x):
        return self.scale * self.base.gradients(self._inner(x)) @ self.T + self.tilt

    def hessians(self, x):
        H = self.base.hessians(self._inner(x))
        return self.scale * np.einsum('ji,mjk,kl->mil', self.T, H, self.T)

    def natural_box(self):
        lower, upper = self.base.natural_box()
        corners = np.array(np.meshgrid(*zip(lower, upper), indexing='ij')).reshape(self.dim, -1).T
        pulled = (corners - self.shift) @ np.linalg.inv(self.T).T
        return pulled.min(axis=0), pulled.max(axis=0)

    def conjugate(self):
        base_dual = self.base.conjugate()
        if base_dual is None:
            return None
        T_inv = np.linalg.inv(self.T)
        T_inv_t = T_inv.T
        return AffineComposite(
            base_dual,
            T_inv_t / self.scale,
            shift=-(T_inv_t @ self.tilt) / self.scale,
            tilt=-(T_inv @ self.shift),
            offset=-self.offset + float((T_inv @ self.shift) @ self.tilt),
            scale=self.scale,
        )

    def s_conjugate(self, s):
        if not self.is_linear:
            return None
        base_dual = self.base.s_conjugate(s)
        if base_dual is None:
            return None
        return compose_linear(base_dual, np.linalg.inv(self.T).T)

    @property
    def kind(self) -> str:
        return self.base.kind

    def describe(self):
        return f"({self.base.describe()})∘T"


@dataclass(frozen=True, eq=False)
class SampledConvex(FunctionRep):
    """Grid samples with +inf marking points outside the domain."""

    grid: Grid
    samples: np.ndarray

    closed_form = False

    def __post_init__(self):
        vals = np.asarray(self.samples, dtype=float).reshape(self.grid.shape)
        if np.any(np.isnan(vals)):
            raise ValueError("Sampled values must not contain NaN (use inf outside the domain)")
        if not np.any(np.isfinite(vals)):
            raise ValueError("Sampled function is infinite everywhere")
        vals = np.where(vals == -np.inf, np.nan, vals)
        if np.any(np.isnan(vals)):
            raise ValueError("Sampled values must not be -inf")
        _check_axis_convexity(vals)
        object.__setattr__(self, 'samples', vals)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def _interpolators(self):
        finite = np.isfinite(self.samples)
        filled = np.where(finite, self.samples, 0.0)
        body = RegularGridInterpolator(self.grid.axes, filled, method='linear', bounds_error=False, fill_value=np.inf)
        holes = RegularGridInterpolator(
            self.grid.axes, (~finite).astype(float), method='linear', bounds_error=False, fill_value=1.0
        )
        return body, holes

    def values(self, x):
        x = _as_points(x, self.dim)
        body, holes = self._interpolators
        out = body(x)
        return np.where(holes(x) > 0, np.inf, out)

    def gradients(self, x):
        x = _as_points(x, self.dim)
        h = self.grid.spacing
        grads = np.empty_like(x)
        for i in range(self.dim):
            step = np.zeros(self.dim)
            step[i] = h[i]
            grads[:, i] = (self.values(x + step) - self.values(x - step)) / (2 * h[i])
        return np.where(np.isfinite(grads), grads, np.nan)

    def hessians(self, x):
        x = _as_points(x, self.dim)
        h = self.grid.spacing
        f0 = self.values(x)
        H = np.empty((x.shape[0], self.dim, self.dim))
        for i in range(self.dim):
            ei = np.zeros(self.dim)
            ei[i] = h[i]
            H[:, i, i] = (self.values(x + ei) - 2 * f0 + self.values(x - ei)) / h[i] ** 2
            for j in range(i + 1, self.dim):
                ej = np.zeros(self.dim)
                ej[j] = h[j]
                mixed = (
                    self.values(x + ei + ej) - self.values(x + ei - ej)
                    - self.values(x - ei + ej) + self.values(x - ei - ej)
                ) / (4 * h[i] * h[j])
                H[:, i, j] = H[:, j, i] = mixed
        return np.where(np.isfinite(H), H, np.nan)

    def natural_box(self):
        return self.grid.lower.copy(), self.grid.upper.copy()

    def describe(self):
        return f"sampled:{self.grid.counts}"


def _check_axis_convexity(vals: np.ndarray) -> None:
    finite_vals = vals[np.isfinite(vals)]
    scale = max(1.0, float(np.max(np.abs(finite_vals))))
    for axis in range(vals.ndim):
        if vals.shape[axis] < 3:
            continue
        lo = np.take(vals, range(0, vals.shape[axis] - 2), axis=axis)
        mid = np.take(vals, range(1, vals.shape[axis] - 1), axis=axis)
        hi = np.take(vals, range(2, vals.shape[axis]), axis=axis)
        ok = np.isfinite(lo) & np.isfinite(mid) & np.isfinite(hi)
        second = (lo + hi - 2 * mid)[ok]
        if second.size and second.min() < -EPS_CVX_REL * scale:
            raise ValueError(
                f"Sampled values are not convex along axis {axis} "
                f"(second difference {second.min():.3e})"
            )


def sample_on(psi: FunctionRep, grid: Grid) -> SampledConvex:
    """Tabulate any representation on `grid`."""
    return SampledConvex(grid, psi.values(grid.points).reshape(grid.shape))


def auto_grid(psi: FunctionRep, counts: Optional[int] = None) -> Grid:
    """Grid over the natural box of `psi` with an odd count per axis."""
    lower, upper = psi.natural_box()
    count = counts if counts is not None else grid_points(psi.dim)
    if count % 2 == 0:
        count += 1
    return Grid(lower, upper, (count,) * psi.dim)


@dataclass(frozen=True, eq=False)
class RegularSet:
    """Grid nodes of X_psi with cached derivatives, in grid order."""

    grid: Grid
    indices: np.ndarray
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray
    hess_dets: np.ndarray

    def __len__(self) -> int:
        return self.indices.size

    def restrict(self, keep: np.ndarray) -> 'RegularSet':
        return RegularSet(
            self.grid,
            self.indices[keep],
            self.points[keep],
            self.values[keep],
            self.gradients[keep],
            self.hessians[keep],
            self.hess_dets[keep],
        )

    def node_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.size, dtype=bool)
        mask[self.indices] = True
        return mask

    def boundary_mask(self) -> np.ndarray:
        """Nodes with an axis neighbour outside the set or off the grid."""
        inside = self.node_mask().reshape(self.grid.shape)
        edge = np.zeros_like(inside)
        for axis in range(inside.ndim):
            for k in (-1, 1):
                edge |= ~grid_shift(inside, axis, k, False)
        return edge.reshape(-1)[self.indices]


def neighbour_table(grid: Grid, keep: np.ndarray) -> np.ndarray:
    """(M, dim, 2) positions of the -1/+1 axis neighbours among grid[keep]; -1 if absent."""
    keep = np.asarray(keep, dtype=bool).reshape(-1)
    pos = np.full(grid.size, -1, dtype=np.int64)
    pos[keep] = np.arange(int(keep.sum()))
    table = pos.reshape(grid.shape)
    out = np.empty((int(keep.sum()), len(grid.shape), 2), dtype=np.int64)
    for axis in range(len(grid.shape)):
        for j, k in enumerate((-1, 1)):
            out[:, axis, j] = grid_shift(table, axis, k, -1).reshape(-1)[keep]
    return out


def grid_shift(arr: np.ndarray, axis: int, k: int, fill) -> np.ndarray:
    """out[i] = arr[i + k] along `axis`, `fill` where that falls off the grid."""
    out = np.full_like(arr, fill)
    dst = [slice(None)] * arr.ndim
    src = [slice(None)] * arr.ndim
    if k > 0:
        dst[axis], src[axis] = slice(0, -k), slice(k, None)
    else:
        dst[axis], src[axis] = slice(-k, None), slice(0, k)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _stencil_mask(finite: np.ndarray) -> np.ndarray:
    mask = finite.copy()
    for axis in range(finite.ndim):
        for k in (1, 2):
            mask &= grid_shift(finite, axis, k, False) & grid_shift(finite, axis, -k, False)
    return mask


def grid_derivatives(vals: np.ndarray, spacing: np.ndarray):
    f = np.where(np.isfinite(vals), vals, np.nan)
    n = f.ndim
    grads = np.empty(f.shape + (n,))
    hess = np.empty(f.shape + (n, n))
    for i in range(n):
        fwd = grid_shift(f, i, 1, np.nan)
        bwd = grid_shift(f, i, -1, np.nan)
        grads[..., i] = (fwd - bwd) / (2 * spacing[i])
        hess[..., i, i] = (fwd - 2 * f + bwd) / spacing[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            g = grads[..., i]
            mixed = (grid_shift(g, j, 1, np.nan) - grid_shift(g, j, -1, np.nan)) / (2 * spacing[j])
            hess[..., i, j] = hess[..., j, i] = mixed
    return grads.reshape(-1, n), hess.reshape(-1, n, n)


def regular_set(psi: FunctionRep, grid: Optional[Grid] = None, stencil: Optional[bool] = None) -> RegularSet:
    """Nodes of `grid` in X_psi: finite value, derivative stencil fits, det Hessian > eps_det.

    The 5-point-per-axis stencil rule applies to every representation unless
    `stencil=False` is passed; closed forms then use their exact domain.
    Sampled representations always need the stencil.
    """
    grid = grid if grid is not None else auto_grid(psi)
    if grid.dim != psi.dim:
        raise ValueError(f"Grid dimension {grid.dim} does not match function dimension {psi.dim}")
    use_stencil = True if stencil is None else stencil
    if not psi.closed_form:
        use_stencil = True

    pts = grid.points
    vals = np.asarray(psi.values(pts), dtype=float)
    finite = np.isfinite(vals)
    ok = finite.reshape(grid.shape)
    if use_stencil:
        ok = _stencil_mask(ok)
    ok = ok.ravel()

    if psi.closed_form:
        grads = np.full((grid.size, psi.dim), np.nan)
        hess = np.full((grid.size, psi.dim, psi.dim), np.nan)
        if ok.any():
            grads[ok] = psi.gradients(pts[ok])
            hess[ok] = psi.hessians(pts[ok])
    else:
        grads, hess = grid_derivatives(vals.reshape(grid.shape), grid.spacing)

    ok &= np.all(np.isfinite(grads), axis=1) & np.all(np.isfinite(hess), axis=(1, 2))
    if not ok.any():
        raise EmptyRegionError(f"Regular set of {psi.describe()} is empty on grid {grid.counts}")

    H = hess[ok]
    asym = np.max(np.abs(H - np.swapaxes(H, 1, 2)), axis=(1, 2))
    scale = np.maximum(np.max(np.abs(H), axis=(1, 2)), 1e-300)
    sym_ok = asym <= EPS_SYM_REL * scale
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    dets = np.linalg.det(H)

    diag = np.diagonal(H, axis1=1, axis2=2)
    positive = diag[diag > 0]
    typical = float(np.median(positive)) if positive.size else 1.0
    eps_det = EPS_DET_REL * typical ** psi.dim

    keep = sym_ok & (dets > eps_det)
    if not keep.any():
        raise EmptyRegionError(
            f"No grid node of {psi.describe()} has an invertible Hessian (eps_det={eps_det:.3e})"
        )
    idx = np.flatnonzero(ok)[keep]
    return RegularSet(grid, idx, pts[idx], vals[idx], grads[ok][keep], H[keep], dets[keep])


def evaluate(psi: FunctionRep, x: Sequence[float]) -> float:
    """psi(x), +inf outside the domain."""
    pts = np.asarray(x, dtype=float).reshape(-1)
    if pts.size != psi.dim:
        raise ValueError(f"Point has dimension {pts.size}, function has dimension {psi.dim}")
    return float(psi.values(pts.reshape(1, -1))[0])


def _check_stencil(psi: FunctionRep, x: np.ndarray, reach: int) -> None:
    if psi.closed_form:
        if not np.isfinite(psi.values(x.reshape(1, -1))[0]):
            raise ValueError(f"Point {x.tolist()} lies outside the domain of {psi.describe()}")
        return
    h = psi.grid.spacing
    lower, upper = psi.grid.lower, psi.grid.upper
    if np.any(x - reach * h < lower - 1e-12) or np.any(x + reach * h > upper + 1e-12):
        raise ValueError(f"Point {x.tolist()} is closer than {reach} spacing(s) to the grid boundary")
    offsets = [np.zeros(psi.dim)]
    for i in range(psi.dim):
        for k in range(1, reach + 1):
            step = np.zeros(psi.dim)
            step[i] = k * h[i]
            offsets.extend([step, -step])
    stencil = x + np.array(offsets)
    if not np.all(np.isfinite(psi.values(stencil))):
        raise ValueError(f"Infinite value inside the difference stencil at {x.tolist()}")


def gradient(psi: FunctionRep, x: Sequence[float]) -> np.ndarray:
    """Analytic gradient for closed forms, central differences for samples."""
    pts = np.asarray(x, dtype=float).reshape(-1)
    if pts.size != psi.dim:
        raise ValueError(f"Point has dimension {pts.size}, function has dimension {psi.dim}")
    _check_stencil(psi, pts, reach=1)
    return psi.gradients(pts.reshape(1, -1))[0]


def hessian(psi: FunctionRep, x: Sequence[float]) -> np.ndarray:
    """Symmetrised Hessian; samples use second-order central differences."""
    pts = np.asarray(x, dtype=float).reshape(-1)
    if pts.size != psi.dim:
        raise ValueError(f"Point has dimension {pts.size}, function has dimension {psi.dim}")
    _check_stencil(psi, pts, reach=2)
    H = psi.hessians(pts.reshape(1, -1))[0]
    return 0.5 * (H + H.T)


def compose_linear(psi: FunctionRep, T: np.ndarray) -> FunctionRep:
    """x -> psi(T x), folding into Quadratic or an existing composition."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape != (psi.dim, psi.dim):
        raise ValueError(f"Composition matrix must be {psi.dim}x{psi.dim}, got {T.shape}")
    if abs(np.linalg.det(T)) <= EPS_SINGULAR:
        raise ValueError("Composition matrix is singular")
    if isinstance(psi, Quadratic):
        A = T.T @ psi.A @ T
        return Quadratic(0.5 * (A + A.T), psi.a)
    if isinstance(psi, AffineComposite):
        return AffineComposite(psi.base, psi.T @ T, psi.shift, T.T @ psi.tilt, psi.offset, psi.scale)
    return AffineComposite(psi, T)


def translate(psi: FunctionRep, z: Sequence[float]) -> FunctionRep:
    """x -> psi(x + z)."""
    z = np.asarray(z, dtype=float).reshape(psi.dim)
    if isinstance(psi, AffineComposite):
        return AffineComposite(
            psi.base, psi.T, psi.T @ z + psi.shift, psi.tilt, psi.offset + float(psi.tilt @ z), psi.scale
        )
    return AffineComposite(psi, np.eye(psi.dim), shift=z)


def dilate(psi: FunctionRep, lam: float) -> FunctionRep:
    """x -> psi(lam x)."""
    return compose_linear(psi, lam * np.eye(psi.dim))


def perturbed_quadratic(A: np.ndarray, eps: float, center: Optional[Iterable[float]] = None, a: float = 0.0) -> FunctionRep:
    """<Ax, x> + a + eps |x - v|^4: the randomised log-concave roster member."""
    quad = Quadratic(A, a)
    v = np.zeros(quad.dim) if center is None else np.asarray(list(center), dtype=float)
    if eps == 0:
        return quad
    return SumRep((quad, QuarticBump(eps, v)))


def scaled_envelope(s: float, A: np.ndarray, ctilde: float = 1.0) -> FunctionRep:
    """Potential of ctilde * [(1 - s|Ax|^2)_+]^{1/(2s)}."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    env = compose_linear(SEnvelope(s, 1.0, A.shape[0]), A)
    if ctilde == 1.0:
        return env
    k = ctilde ** s
    linear = env if isinstance(env, AffineComposite) else AffineComposite(env, np.eye(A.shape[0]))
    return AffineComposite(linear.base, linear.T, scale=k, offset=(1.0 - k) / s)


def save_csv(psi: FunctionRep, path: Path | str, grid: Optional[Grid] = None) -> Path:
    """Write samples as `x1..xn,value` rows in grid order; inf marks outside the domain."""
    path = Path(path)
    if isinstance(psi, SampledConvex) and grid is None:
        grid, vals = psi.grid, psi.samples.ravel()
    else:
        grid = grid if grid is not None else auto_grid(psi)
        vals = psi.values(grid.points)
    header = [f"x{i + 1}" for i in range(grid.dim)] + ['value']
    with path.open('w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for point, value in zip(grid.points, vals):
            writer.writerow([repr(float(v)) for v in point] + [repr(float(value))])
    return path


def load_csv(path: Path | str) -> SampledConvex:
    """Read a CSV written by `save_csv` (any row order) back into a SampledConvex."""
    path = Path(path)
    with path.open(newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise ValueError(f"CSV file {path} is empty") from exc
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not header or header[-1].strip() != 'value':
        raise ValueError(f"CSV file {path} must end its header with a 'value' column")
    data = np.asarray(rows, dtype=float)
    dim = len(header) - 1
    if data.ndim != 2 or data.shape[1] != dim + 1:
        raise ValueError(f"CSV file {path} rows do not match its {dim + 1}-column header")

    axes = [np.unique(data[:, i]) for i in range(dim)]
    for i, axis in enumerate(axes):
        steps = np.diff(axis)
        if axis.size < 5 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError(f"CSV file {path} column x{i + 1} is not a uniform grid of at least 5 nodes")
    grid = Grid([a[0] for a in axes], [a[-1] for a in axes], tuple(a.size for a in axes))
    if data.shape[0] != grid.size:
        raise ValueError(f"CSV file {path} has {data.shape[0]} rows, grid needs {grid.size}")

    index = tuple(np.rint((data[:, i] - axes[i][0]) / grid.spacing[i]).astype(int) for i in range(dim))
    vals = np.full(grid.shape, np.nan)
    vals[index] = data[:, -1]
    if np.any(np.isnan(vals)):
        raise ValueError(f"CSV file {path} does not cover every grid node")
    return SampledConvex(grid, vals)
