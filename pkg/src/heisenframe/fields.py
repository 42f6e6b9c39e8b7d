"""Operator-valued data on the frequency side: fields sigma -> HS operator.

A field assigns to each nonzero frequency sigma a Hilbert-Schmidt operator on
the window grid.  The workhorse is the rank-one field built from a generator
window v: on its support interval (lo, hi] it takes the value
scale(sigma) * (v_sigma (x) v_sigma), the scaled projection onto the dilated
window.  Dense fields carry explicit kernel matrices on a finite list of
sigma samples.

Fiberization periodizes a field over integer shifts of a torus point alpha
and attaches the Plancherel density: entry(m) = field(alpha + m) * |alpha + m|^(d/2).
HS inner products of rank-one entries never materialize matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    ParameterError,
)
from .grid import QuadratureRule, SampledWindow, inner_product, window_lincomb
from .schrodinger import GroupElement, dilate, schrodinger_apply


@dataclass(frozen=True)
class ScaleSpec:
    """Per-sigma scalar multiplier c(sigma), from a small whitelist.

    kind "const": c(sigma) = value.  kind "power": c(sigma) = sigma ** value,
    defined for sigma > 0 (all interval-supported fields live in (0, 1]).
    """

    kind: str = "const"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "power"):
            raise ConfigError(f"unknown scale kind '{self.kind}' (allowed: const, power)")

    def __call__(self, sigma: float) -> complex:
        if self.kind == "const":
            return complex(self.value)
        if sigma <= 0:
            raise ParameterError(f"power scale needs sigma > 0, got {sigma}")
        return complex(sigma ** self.value)


UNIT_SCALE = ScaleSpec("const", 1.0)


@dataclass(frozen=True)
class RankOneEntry:
    """coeff * (left (x) right): the operator f -> coeff <f, right> left."""

    coeff: complex
    left: SampledWindow
    right: SampledWindow

    def hs_norm(self) -> float:
        return abs(self.coeff) * self.left.norm() * self.right.norm()

    def scaled(self, c: complex) -> "RankOneEntry":
        return RankOneEntry(self.coeff * c, self.left, self.right)


@dataclass(frozen=True)
class DenseEntry:
    """An explicit kernel matrix K[i, j] ~ K(x_i, x'_j) on midpoint grids."""

    matrix: np.ndarray
    left_x0: float
    left_dx: float
    right_x0: float
    right_dx: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2:
            raise DimensionMismatchError("dense entry needs a 2-d matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def hs_norm(self) -> float:
        return float(
            np.sqrt(np.sum(np.abs(self.matrix) ** 2) * self.left_dx * self.right_dx)
        )

    def scaled(self, c: complex) -> "DenseEntry":
        return DenseEntry(self.matrix * c, self.left_x0, self.left_dx, self.right_x0, self.right_dx)


Entry = Union[RankOneEntry, DenseEntry]


def to_dense(entry: RankOneEntry) -> DenseEntry:
    mat = entry.coeff * np.outer(entry.left.samples, np.conj(entry.right.samples))
    return DenseEntry(mat, entry.left.x0, entry.left.dx, entry.right.x0, entry.right.dx)


def _align_dense(a: DenseEntry, b: DenseEntry) -> tuple[DenseEntry, DenseEntry]:
    if a.matrix.shape == b.matrix.shape and (
        abs(a.left_x0 - b.left_x0) <= 1e-9 * a.left_dx
        and abs(a.right_x0 - b.right_x0) <= 1e-9 * a.right_dx
    ):
        return a, b
    if abs(a.left_dx - b.left_dx) > 1e-9 * a.left_dx or abs(a.right_dx - b.right_dx) > 1e-9 * a.right_dx:
        raise DimensionMismatchError("dense entries on incompatible grids")

    def pad(e: DenseEntry, lx0, ln, rx0, rn) -> DenseEntry:
        kl = int(round((e.left_x0 - lx0) / e.left_dx))
        kr = int(round((e.right_x0 - rx0) / e.right_dx))
        out = np.zeros((ln, rn), dtype=np.complex128)
        out[kl : kl + e.matrix.shape[0], kr : kr + e.matrix.shape[1]] = e.matrix
        return DenseEntry(out, lx0, e.left_dx, rx0, e.right_dx)

    lx0 = min(a.left_x0, b.left_x0)
    rx0 = min(a.right_x0, b.right_x0)
    ln = max(
        int(round((a.left_x0 - lx0) / a.left_dx)) + a.matrix.shape[0],
        int(round((b.left_x0 - lx0) / b.left_dx)) + b.matrix.shape[0],
    )
    rn = max(
        int(round((a.right_x0 - rx0) / a.right_dx)) + a.matrix.shape[1],
        int(round((b.right_x0 - rx0) / b.right_dx)) + b.matrix.shape[1],
    )
    return pad(a, lx0, ln, rx0, rn), pad(b, lx0, ln, rx0, rn)


def hs_inner(a, b) -> complex:
    """Trace inner product tr(B^* A) with quadrature weights.

    Accepts single entries, tuples of entries (sums of operators), or None
    (the zero operator).  Rank-one pairs are evaluated through window inner
    products without materializing matrices.
    """
    a_terms = _terms(a)
    b_terms = _terms(b)
    total = 0.0 + 0.0j
    for ta in a_terms:
        for tb in b_terms:
            total += _hs_inner_single(ta, tb)
    return complex(total)


def _terms(x) -> tuple:
    if x is None:
        return ()
    if isinstance(x, (RankOneEntry, DenseEntry)):
        return (x,)
    return tuple(x)


def _hs_inner_single(a: Entry, b: Entry) -> complex:
    if isinstance(a, RankOneEntry) and isinstance(b, RankOneEntry):
        return (
            a.coeff
            * np.conj(b.coeff)
            * inner_product(a.left, b.left)
            * np.conj(inner_product(a.right, b.right))
        )
    da = to_dense(a) if isinstance(a, RankOneEntry) else a
    db = to_dense(b) if isinstance(b, RankOneEntry) else b
    da, db = _align_dense(da, db)
    return complex(np.vdot(db.matrix, da.matrix) * da.left_dx * da.right_dx)


def entry_hs_norm(x) -> float:
    return math.sqrt(max(hs_inner(x, x).real, 0.0))


def apply_pi_entry(sigma: float, lambda1: tuple[float, float], x):
    """Compose pi_sigma(lambda1) with an operator entry (or entry sum)."""
    g = GroupElement(lambda1[0], lambda1[1], 0.0)
    out = []
    for t in _terms(x):
        if isinstance(t, RankOneEntry):
            out.append(RankOneEntry(t.coeff, schrodinger_apply(sigma, g, t.left), t.right))
        else:
            cols = [
                schrodinger_apply(sigma, g, SampledWindow(t.matrix[:, j], t.left_x0, t.left_dx))
                for j in range(t.matrix.shape[1])
            ]
            mat = np.stack([c.samples for c in cols], axis=1)
            out.append(DenseEntry(mat, cols[0].x0, cols[0].dx, t.right_x0, t.right_dx))
    return tuple(out)


@dataclass(frozen=True)
class OperatorField:
    """A map sigma -> HS operator, rank-one on an interval or dense on samples.

    rank-one: generator window v, support (lo, hi] inside (0, 1], value
    scale(sigma) * (v_sigma (x) v_sigma) on the support and 0 elsewhere.
    dense: explicit matrices at a finite list of sigma samples (zero off the
    list); used for cross-checks and custom instances.
    """

    kind: str
    generator: Optional[SampledWindow] = None
    support: Optional[tuple[float, float]] = None
    scale: ScaleSpec = UNIT_SCALE
    sigma_samples: tuple[float, ...] = ()
    matrices: tuple = ()
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("rank-one", "dense"):
            raise ConfigError(f"unknown field kind '{self.kind}'")
        if self.kind == "rank-one":
            if self.generator is None or self.support is None:
                raise ConfigError("rank-one field needs a generator and a support interval")
        else:
            if len(self.sigma_samples) != len(self.matrices):
                raise ConfigError("dense field needs one matrix per sigma sample")

    def evaluate(self, sigma: float):
        """The operator value at sigma (Entry, entry tuple, or None for zero)."""
        if self.kind == "rank-one":
            lo, hi = self.support
            if not (lo < sigma <= hi):
                return None
            c = self.scale(sigma)
            if c == 0:
                return None
            vs = dilate(self.generator, sigma)
            return RankOneEntry(c, vs, vs)
        for s, m in zip(self.sigma_samples, self.matrices):
            if abs(s - sigma) <= 1e-12 * max(1.0, abs(s)):
                return m
        return None

    def hs_norm_at(self, sigma: float) -> float:
        return entry_hs_norm(self.evaluate(sigma))


def build_Ht(v: SampledWindow, t: float, scale: Optional[ScaleSpec] = None) -> OperatorField:
    """Rank-one field with generator v supported on (t, 1].

    With a unit generator and unit scale the operator is the orthogonal
    projection onto v_sigma, of HS norm 1 on the support.
    """
    t = float(t)
    if not (0.0 < t < 1.0):
        raise ParameterError(f"support parameter t must lie in (0, 1), got {t}")
    if v.norm() == 0.0:
        raise ParameterError("generator window must be nonzero")
    return OperatorField(kind="rank-one", generator=v, support=(t, 1.0), scale=scale or UNIT_SCALE)


def dense_field(sigma_samples: Sequence[float], entries: Sequence) -> OperatorField:
    """A dense field from explicit per-sigma entries (DenseEntry or tuples)."""
    return OperatorField(
        kind="dense",
        sigma_samples=tuple(float(s) for s in sigma_samples),
        matrices=tuple(entries),
    )


def pfaffian_weight(sigma: float, d: int) -> float:
    """The Plancherel density |sigma|^d."""
    if d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d}")
    return abs(float(sigma)) ** d


@dataclass(frozen=True)
class FiberElement:
    """A finite sequence over central frequencies m of HS entries.

    entries[j] corresponds to m = j - M and holds a tuple of Entry terms
    (empty tuple = stored zero marker).  Entries carry the |alpha + m|^(d/2)
    fiberization weight already.
    """

    alpha: float
    M: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != 2 * self.M + 1:
            raise ConfigError("fiber element must have 2M + 1 entries")
        object.__setattr__(self, "entries", tuple(_terms(e) for e in self.entries))

    def entry(self, m: int):
        return self.entries[m + self.M]

    def ms(self):
        return range(-self.M, self.M + 1)

    def inner(self, other: "FiberElement") -> complex:
        if self.M != other.M:
            raise DimensionMismatchError(
                f"fiber truncations differ: M={self.M} vs {other.M}"
            )
        return complex(sum(hs_inner(self.entry(m), other.entry(m)) for m in self.ms()))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def add(self, other: "FiberElement") -> "FiberElement":
        if self.M != other.M:
            raise DimensionMismatchError("fiber truncations differ")
        return FiberElement(
            self.alpha,
            self.M,
            tuple(self.entries[i] + other.entries[i] for i in range(len(self.entries))),
        )

    def scaled(self, c: complex) -> "FiberElement":
        return FiberElement(
            self.alpha,
            self.M,
            tuple(tuple(t.scaled(c) for t in e) for e in self.entries),
        )

    def apply_pi(self, lambda1: tuple[float, float]) -> "FiberElement":
        """Entrywise action pi_(alpha+m)(lambda1) applied on the left."""
        out = []
        for m in self.ms():
            e = self.entry(m)
            out.append(apply_pi_entry(self.alpha + m, lambda1, e) if e else ())
        return FiberElement(self.alpha, self.M, tuple(out))

    def compact(self) -> "FiberElement":
        """Merge rank-one terms that share the same right factor object."""
        out = []
        for e in self.entries:
            groups: dict[int, list[RankOneEntry]] = {}
            rest = []
            for t in e:
                if isinstance(t, RankOneEntry):
                    groups.setdefault(id(t.right), []).append(t)
                else:
                    rest.append(t)
            merged = []
            for terms in groups.values():
                if len(terms) == 1:
                    merged.append(terms[0])
                    continue
                left = window_lincomb([t.coeff for t in terms], [t.left for t in terms])
                merged.append(RankOneEntry(1.0, left, terms[0].right))
            out.append(tuple(merged) + tuple(rest))
        return FiberElement(self.alpha, self.M, tuple(out))

    def is_zero(self) -> bool:
        return all(len(e) == 0 for e in self.entries)


def fiberize(field: OperatorField, alpha: float, M: int) -> FiberElement:
    """entry(m) = field(alpha + m) * |alpha + m|^(d/2) for m in [-M, M]."""
    entries = []
    for m in range(-M, M + 1):
        sigma = alpha + m
        if sigma == 0.0:
            entries.append(())
            continue
        e = field.evaluate(sigma)
        if e is None:
            entries.append(())
            continue
        w = math.sqrt(pfaffian_weight(sigma, field.d))
        entries.append(tuple(t.scaled(w) for t in _terms(e)))
    return FiberElement(float(alpha), int(M), tuple(entries))


def field_norm2(
    field: OperatorField,
    n_sigma: int = 4096,
    rule: Optional[QuadratureRule] = None,
    sigma_weights: Optional[Sequence[float]] = None,
) -> float:
    """integral of ||H(sigma)||_HS^2 |sigma|^d d sigma (membership norm).

    Rank-one fields integrate |scale|^2 |sigma|^d over the support interval
    (the dilated-projection HS norm is sigma-independent); dense fields sum
    their samples against explicit weights.
    """
    if field.kind == "rank-one":
        rule = rule or QuadratureRule("riemann-midpoint")
        lo, hi = field.support
        gen4 = field.generator.norm() ** 4

        def integrand(xs: np.ndarray) -> np.ndarray:
            return np.array(
                [abs(field.scale(float(s))) ** 2 * pfaffian_weight(s, field.d) for s in xs]
            )

        return gen4 * float(np.real(rule.integrate(integrand, lo, hi, n_sigma)))
    if sigma_weights is None:
        raise ConfigError("dense field norm needs explicit sigma weights")
    total = 0.0
    for s, e, w in zip(field.sigma_samples, field.matrices, sigma_weights):
        total += entry_hs_norm(e) ** 2 * pfaffian_weight(s, field.d) * w
    return total
