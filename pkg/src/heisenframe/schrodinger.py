"""The Schrodinger representation on L2(R), dilations, and Gabor inner products.

For a nonzero plane frequency sigma and a group point (x, y, z) the
representation acts by

    (pi_sigma(x, y, z) f)(x') = exp(2 pi i sigma z) exp(-2 pi i sigma y x') f(x' - x),

i.e. a central character, a modulation, and a translation.  The dilation
v_y(x) = |y|^(1/2) v(y x) rescales the grid itself, so it is exact at the
sample level.  Gabor inner products <pi_alpha(lambda1) v_alpha, w_alpha> are
computed by default through the ambiguity function

    A(s, nu) = integral v(u - s) conj(w(u)) exp(-2 pi i nu u) du

at (s, nu) = (alpha * x_shift, y_mod); the direct representation path is kept
as an independent oracle.  Both paths evaluate shifted windows through the
same interpolation kernel, so they agree to rounding error on a shared grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDilationError, InvalidFrequencyError, ConfigError
from .grid import (
    SampledWindow,
    inner_product,
    same_grid,
    to_common_grid,
    values_at,
    wrap_samples,
)


@dataclass(frozen=True)
class GroupElement:
    """A point (x, y, z) of the group; x, y scalar at desk scale (d=1)."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ConfigError(f"group coordinate {name} must be finite")
            object.__setattr__(self, name, val)


@dataclass(frozen=True)
class PlaneFrequency:
    """The dual-of-center variable sigma, nonzero."""

    sigma: float

    def __post_init__(self):
        if self.sigma == 0.0 or not math.isfinite(self.sigma):
            raise InvalidFrequencyError("sigma must be finite and nonzero")
        object.__setattr__(self, "sigma", float(self.sigma))


def _sigma_value(sigma) -> float:
    s = sigma.sigma if isinstance(sigma, PlaneFrequency) else float(sigma)
    if s == 0.0 or not math.isfinite(s):
        raise InvalidFrequencyError("sigma must be finite and nonzero")
    return s


def schrodinger_apply(sigma, g: GroupElement, f: SampledWindow) -> SampledWindow:
    """Apply pi_sigma(g) to a window.

    The output lives on the input grid extended by whole grid steps so that
    it covers the translated support; translation by a non-multiple of dx
    evaluates f through linear interpolation.
    """
    s = _sigma_value(sigma)
    k = int(np.ceil(abs(g.x) / f.dx - 1e-9)) if g.x != 0.0 else 0
    if k == 0:
        x0, n = f.x0, f.n
    elif g.x > 0:
        x0, n = f.x0, f.n + k
    else:
        x0, n = f.x0 - k * f.dx, f.n + k
    pos = x0 + (np.arange(n) + 0.5) * f.dx
    shifted = values_at(f, pos - g.x) if g.x != 0.0 else np.array(f.samples, copy=True)
    if g.y != 0.0:
        shifted *= np.exp(-2j * np.pi * s * g.y * pos)
    if g.z != 0.0:
        shifted *= np.exp(2j * np.pi * s * g.z)
    return wrap_samples(shifted, x0, f.dx)


def dilate(v: SampledWindow, y: float) -> SampledWindow:
    """Return v_y(x) = |y|^(1/2) v(y x) on the rescaled grid (exact)."""
    y = float(y)
    if y == 0.0 or not math.isfinite(y):
        raise InvalidDilationError("dilation parameter must be finite and nonzero")
    c = math.sqrt(abs(y))
    if y > 0:
        return wrap_samples(v.samples * c, v.x0 / y, v.dx / y)
    return wrap_samples(v.samples[::-1] * c, v.x_end / y, v.dx / abs(y))


def ambiguity(v: SampledWindow, w: SampledWindow, s: float, nu: float) -> complex:
    """A(s, nu) = integral v(u - s) conj(w(u)) exp(-2 pi i nu u) du."""
    if not same_grid(v, w):
        v, w = to_common_grid(v, w)
    pos = w.positions()
    vals = values_at(v, pos - s)
    integrand = vals * np.conj(w.samples) * np.exp(-2j * np.pi * nu * pos)
    return complex(w.dx * np.sum(integrand))


def gabor_inner(
    v: SampledWindow,
    w: SampledWindow,
    alpha: float,
    lambda1: tuple[float, float],
) -> complex:
    """<pi_alpha(lambda1) v_alpha, w_alpha> via the ambiguity fast path.

    lambda1 = (x_shift, y_mod) is the actual lattice point (m a, n b).  After
    the substitution u = alpha x the inner product equals
    A(alpha * x_shift, y_mod), for any nonzero alpha.
    """
    a = _sigma_value(alpha)
    return ambiguity(v, w, a * lambda1[0], lambda1[1])


def gabor_inner_direct(
    v: SampledWindow,
    w: SampledWindow,
    alpha: float,
    lambda1: tuple[float, float],
) -> complex:
    """Oracle path: dilate, apply the representation, take the inner product."""
    a = _sigma_value(alpha)
    va = dilate(v, a)
    wa = dilate(w, a)
    moved = schrodinger_apply(a, GroupElement(lambda1[0], lambda1[1], 0.0), va)
    return inner_product(moved, wa)


def dilation_invariant_inner(v: SampledWindow, w: SampledWindow, alpha: float) -> complex:
    """<v_alpha, w_alpha>, which equals <v, w> by unitarity of the dilation.

    Both sides are computed and cross-checked; a disagreement beyond rounding
    indicates a broken grid convention.
    """
    a = float(alpha)
    if a == 0.0:
        raise InvalidDilationError("alpha must be nonzero")
    lhs = inner_product(dilate(v, a), dilate(w, a))
    rhs = inner_product(v, w)
    scale = max(1.0, abs(rhs))
    if abs(lhs - rhs) > 1e-9 * scale:
        raise AssertionError(
            f"dilation invariance violated: <v_a,w_a>={lhs!r} vs <v,w>={rhs!r}"
        )
    return lhs
