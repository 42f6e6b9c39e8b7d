"""Grids, quadrature, lattices, and the sampled-window data model.

Windows are complex-valued functions sampled at the midpoints of a uniform
1-d grid: ``samples[i] ~ f(x0 + (i + 1/2) dx)``, supported on
``[x0, x0 + n dx)``.  All integrals over windows use the Riemann-midpoint
rule, which is exact for piecewise-constant presets whose breakpoints fall
on grid-cell edges.  Everything here is immutable after construction and
safe to share across workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, GridMismatchError, UnsupportedDimensionError

log = logging.getLogger(__name__)

# Relative slack (in units of dx) when deciding whether sample positions of
# two grids coincide.  Below this, values are read off directly instead of
# interpolated.
ALIGN_RTOL = 1e-9

WINDOW_PRESETS = ("box", "half-box-sqrt2", "gaussian", "hat")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SampledWindow:
    """A complex window on a uniform midpoint grid.

    Attributes:
        samples: complex values at positions x0 + (i + 1/2) dx.
        x0: left endpoint of the support interval.
        dx: grid spacing, > 0.
        d: ambient dimension; desk scale requires d == 1.
    """

    samples: np.ndarray
    x0: float
    dx: float
    d: int = 1

    def __post_init__(self):
        arr = _freeze(np.atleast_1d(self.samples))
        if arr.ndim != 1 or arr.size < 2:
            raise ConfigError("a sampled window needs at least two samples on a 1-d grid")
        if not np.isfinite(arr).all():
            raise ConfigError("window samples must be finite")
        if not self.dx > 0:
            raise ConfigError(f"grid spacing must be positive, got {self.dx}")
        if self.d != 1:
            raise UnsupportedDimensionError(
                f"desk-scale code paths require d=1, got d={self.d}"
            )
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def x_end(self) -> float:
        return self.x0 + self.n * self.dx

    def positions(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n) + 0.5) * self.dx

    def norm(self) -> float:
        """Quadrature L2 norm, sqrt(dx * sum |f_i|^2)."""
        return float(np.sqrt(self.dx * np.sum(np.abs(self.samples) ** 2)))

    def scaled(self, c: complex) -> "SampledWindow":
        return SampledWindow(self.samples * c, self.x0, self.dx)


def wrap_samples(samples: np.ndarray, x0: float, dx: float) -> SampledWindow:
    """Internal fast constructor: takes ownership of ``samples``, no checks."""
    w = object.__new__(SampledWindow)
    object.__setattr__(w, "samples", samples)
    object.__setattr__(w, "x0", float(x0))
    object.__setattr__(w, "dx", float(dx))
    object.__setattr__(w, "d", 1)
    return w


def same_grid(u: SampledWindow, v: SampledWindow) -> bool:
    return (
        u.n == v.n
        and abs(u.dx - v.dx) <= ALIGN_RTOL * u.dx
        and abs(u.x0 - v.x0) <= ALIGN_RTOL * u.dx
    )


def values_at(w: SampledWindow, xs: np.ndarray) -> np.ndarray:
    """Evaluate a window at arbitrary positions.

    Positions that coincide with sample positions (within ALIGN_RTOL cells)
    are read off exactly; otherwise the samples are linearly interpolated,
    with a one-cell ramp down to zero beyond the outermost samples.
    """
    xs = np.asarray(xs, dtype=float)
    idx = (xs - w.x0) / w.dx - 0.5
    nearest = np.rint(idx)
    if np.all(np.abs(idx - nearest) <= ALIGN_RTOL):
        ii = nearest.astype(np.int64)
        out = np.zeros(xs.shape, dtype=np.complex128)
        ok = (ii >= 0) & (ii < w.n)
        out[ok] = w.samples[ii[ok]]
        return out
    nodes = w.x0 + (np.arange(-1, w.n + 1) + 0.5) * w.dx
    vals = np.concatenate(([0.0 + 0.0j], w.samples, [0.0 + 0.0j]))
    re = np.interp(xs, nodes, vals.real, left=0.0, right=0.0)
    im = np.interp(xs, nodes, vals.imag, left=0.0, right=0.0)
    return re + 1j * im


def resample(w: SampledWindow, x0: float, dx: float, n: int) -> SampledWindow:
    """Resample a window onto the grid (x0, dx, n) by values_at."""
    pos = x0 + (np.arange(n) + 0.5) * dx
    return SampledWindow(values_at(w, pos), x0, dx)


def pad_to_cover(w: SampledWindow, lo: float, hi: float) -> SampledWindow:
    """Zero-pad a window (integer grid steps, exact) so its grid covers [lo, hi)."""
    k_left = max(0, int(np.ceil((w.x0 - lo) / w.dx - ALIGN_RTOL)))
    k_right = max(0, int(np.ceil((hi - w.x_end) / w.dx - ALIGN_RTOL)))
    if k_left == 0 and k_right == 0:
        return w
    samples = np.concatenate(
        (np.zeros(k_left, dtype=np.complex128), w.samples, np.zeros(k_right, dtype=np.complex128))
    )
    return SampledWindow(samples, w.x0 - k_left * w.dx, w.dx)


def to_common_grid(u: SampledWindow, v: SampledWindow) -> tuple[SampledWindow, SampledWindow]:
    """Bring two windows onto one grid covering the union of their supports.

    The finer grid wins (ties: the first argument); the reference window is
    zero-padded exactly while the other is linearly resampled.
    """
    ref, other = (u, v) if u.dx <= v.dx * (1 + ALIGN_RTOL) else (v, u)
    lo = min(u.x0, v.x0)
    hi = max(u.x_end, v.x_end)
    ref_p = pad_to_cover(ref, lo, hi)
    other_p = resample(other, ref_p.x0, ref_p.dx, ref_p.n)
    if ref is u:
        return ref_p, other_p
    return other_p, ref_p


def window_lincomb(coeffs: Sequence[complex], windows: Sequence[SampledWindow]) -> SampledWindow:
    """Pointwise linear combination; grids must share dx and integer offsets."""
    if not windows:
        raise ConfigError("empty linear combination")
    dx = windows[0].dx
    lo = min(w.x0 for w in windows)
    hi = max(w.x_end for w in windows)
    n = int(round((hi - lo) / dx))
    acc = np.zeros(n, dtype=np.complex128)
    for c, w in zip(coeffs, windows):
        if abs(w.dx - dx) > ALIGN_RTOL * dx:
            raise GridMismatchError("window_lincomb requires a common spacing")
        shift = (w.x0 - lo) / dx
        k = round(shift)
        if abs(shift - k) > ALIGN_RTOL:
            raise GridMismatchError("window_lincomb requires integer-aligned grids")
        acc[k : k + w.n] += np.asarray(w.samples) * c
    return wrap_samples(acc, lo, dx)


def _aligned_offset(u: SampledWindow, v: SampledWindow):
    """Integer sample offset of v relative to u, or None if grids differ."""
    if abs(u.dx - v.dx) > ALIGN_RTOL * u.dx:
        return None
    shift = (v.x0 - u.x0) / u.dx
    k = round(shift)
    if abs(shift - k) > ALIGN_RTOL:
        return None
    return k


def inner_product(
    u: SampledWindow,
    v: SampledWindow,
    *,
    allow_resample: bool = True,
) -> complex:
    """Quadrature approximation of the L2 inner product <u, v>.

    Conjugate-linear in the second argument.  Windows whose grids share the
    spacing and are offset by whole steps are reduced exactly over their
    overlap; genuinely different grids are resampled onto the common finer
    grid (with a logged warning) unless ``allow_resample`` is False, in which
    case a GridMismatchError is raised.
    """
    k = _aligned_offset(u, v)
    if k is not None:
        # v's sample j sits at u's index j + k; only the overlap contributes.
        j_lo = max(0, -k)
        j_hi = min(v.n, u.n - k)
        if j_hi <= j_lo:
            return 0j
        return complex(
            u.dx * np.sum(u.samples[j_lo + k : j_hi + k] * np.conj(v.samples[j_lo:j_hi]))
        )
    if not allow_resample:
        raise GridMismatchError(
            f"grids differ (x0 {u.x0} vs {v.x0}, dx {u.dx} vs {v.dx}, n {u.n} vs {v.n})"
        )
    log.warning(
        "inner_product: resampling windows onto a common grid (dx %.3g vs %.3g)",
        u.dx,
        v.dx,
    )
    u, v = to_common_grid(u, v)
    return complex(u.dx * np.sum(u.samples * np.conj(v.samples)))


def window_preset(name: str, n: int, support: Sequence[float]) -> SampledWindow:
    """Sample a named analytic window on a uniform grid over ``support``.

    box            indicator of the support, L2-normalized (1/sqrt(width)).
    half-box-sqrt2 the fixed function sqrt(2) * chi_[0, 1/2).
    gaussian       unit-norm Gaussian 2^(1/4) exp(-pi (x-c)^2), c = support midpoint.
    hat            unit-norm triangle peaking at the support midpoint.
    """
    if n < 2:
        raise ConfigError(f"window needs n >= 2 samples, got {n}")
    lo, hi = float(support[0]), float(support[1])
    width = hi - lo
    if not width > 0:
        raise ConfigError(f"empty window support [{lo}, {hi})")
    dx = width / n
    x = lo + (np.arange(n) + 0.5) * dx
    if name == "box":
        samples = np.full(n, 1.0 / np.sqrt(width), dtype=np.complex128)
    elif name == "half-box-sqrt2":
        samples = np.where((x >= 0.0) & (x < 0.5), np.sqrt(2.0), 0.0).astype(np.complex128)
    elif name == "gaussian":
        c = 0.5 * (lo + hi)
        samples = (2.0 ** 0.25) * np.exp(-np.pi * (x - c) ** 2).astype(np.complex128)
    elif name == "hat":
        c = 0.5 * (lo + hi)
        samples = np.sqrt(3.0 / width) * np.clip(1.0 - np.abs(2.0 * (x - c) / width), 0.0, None)
        samples = samples.astype(np.complex128)
    else:
        raise ConfigError(f"unknown window preset '{name}' (known: {', '.join(WINDOW_PRESETS)})")
    return SampledWindow(samples, lo, dx)


@dataclass(frozen=True)
class TorusGrid:
    """Sample points of the torus variable alpha in (0, 1].

    The canonical grid is the midpoint grid (j + 1/2)/n, which never contains
    the degenerate point 0 where the Pfaffian weight vanishes.  Custom point
    sets (e.g. including the closure point alpha = 1) are allowed but do not
    carry integration weights.
    """

    n_alpha: int
    points: np.ndarray
    uniform: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 1 or pts.size < 1:
            raise ConfigError("torus grid needs at least one point")
        if np.any(pts <= 0.0) or np.any(pts > 1.0):
            raise ConfigError("torus grid points must lie in (0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "n_alpha", int(self.n_alpha))

    @classmethod
    def midpoint(cls, n_alpha: int) -> "TorusGrid":
        if n_alpha < 1:
            raise ConfigError(f"torus grid size must be positive, got {n_alpha}")
        pts = (np.arange(n_alpha) + 0.5) / n_alpha
        return cls(n_alpha, pts, uniform=True)

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "TorusGrid":
        pts = np.asarray(points, dtype=float)
        return cls(pts.size, pts, uniform=False)

    @property
    def weight(self) -> float:
        """Integration weight per point (midpoint grids only)."""
        if not self.uniform:
            raise ConfigError("integration requires the uniform midpoint grid")
        return 1.0 / self.n_alpha


@dataclass(frozen=True)
class LatticeSpec:
    """Separable lattice a Z x b Z in the non-central variables, plus truncations.

    ``a * b`` must be an integer (integer-density hypothesis for the Gabor
    application); ``k_max`` truncates lattice sums, ``central_range``
    truncates the central integer lattice.
    """

    a: float
    b: float
    k_max: int
    central_range: int = 4

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"lattice scales must be positive, got a={self.a}, b={self.b}")
        ab = self.a * self.b
        if abs(ab - round(ab)) > 1e-12:
            raise ConfigError(
                f"lattice.a * lattice.b must be an integer within 1e-12, got {ab!r}"
            )
        if self.k_max < 0 or self.central_range < 0:
            raise ConfigError("truncation radii must be nonnegative")

    def points(self, include_zero: bool = False) -> list[tuple[float, float]]:
        """Lattice points (m a, n b), |m|,|n| <= k_max, in deterministic order."""
        pts = []
        for m in range(-self.k_max, self.k_max + 1):
            for nn in range(-self.k_max, self.k_max + 1):
                if not include_zero and m == 0 and nn == 0:
                    continue
                pts.append((m * self.a, nn * self.b))
        return pts

    def index_points(self, include_zero: bool = False) -> list[tuple[int, int]]:
        return [
            (m, nn)
            for m in range(-self.k_max, self.k_max + 1)
            for nn in range(-self.k_max, self.k_max + 1)
            if include_zero or (m, nn) != (0, 0)
        ]

    def is_shell(self, m: int, nn: int) -> bool:
        return max(abs(m), abs(nn)) == self.k_max


@dataclass(frozen=True)
class QuadratureRule:
    """1-d quadrature over an interval: Riemann-midpoint or trapezoid.

    Both kinds integrate the constant 1 exactly.  ``tolerance_report`` may
    record an observed refinement error for reporting purposes.
    """

    kind: str = "riemann-midpoint"
    tolerance_report: float = 0.0

    def __post_init__(self):
        if self.kind not in ("riemann-midpoint", "trapezoid"):
            raise ConfigError(f"unknown quadrature kind '{self.kind}'")

    def nodes(self, lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 1:
            raise ConfigError("quadrature needs at least one node")
        if self.kind == "riemann-midpoint":
            h = (hi - lo) / n
            x = lo + (np.arange(n) + 0.5) * h
            w = np.full(n, h)
        else:
            h = (hi - lo) / n
            x = lo + np.arange(n + 1) * h
            w = np.full(n + 1, h)
            w[0] = w[-1] = h / 2.0
        return x, w

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> complex:
        # factored as width * (weighted mean) so constants integrate exactly
        x, _ = self.nodes(lo, hi, n)
        vals = np.asarray(fn(x))
        if self.kind == "riemann-midpoint":
            mean = np.sum(vals) / n
        else:
            mean = (np.sum(vals) - 0.5 * (vals[0] + vals[-1])) / n
        out = complex((hi - lo) * mean)
        return out if out.imag != 0.0 else out.real
