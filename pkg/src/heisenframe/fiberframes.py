"""Fiberwise frame systems on finite-dimensional truncations.

A fiber system at a torus point alpha is the finite family
{ pi~_alpha(lambda1) F phi_k(alpha) : k, lambda1 } materialized as flat
complex vectors (dense kernels with quadrature weights folded in, so the
Euclidean inner product equals the HS inner product).  On top of that sit
the range basis of the fiber span J(alpha), Gram matrices, frame bounds,
verification of the dual reproducing identity on J(alpha), and the
classification of duals:

    alternate   sum_i w_i <h, u'_i> u_i = h  for all h in J(alpha);
    oblique     the same with the roles of the two systems swapped;
    type-I      every dual vector lies in J(alpha);
    type-II     the analysis range of the dual is contained in the
                analysis range of the primary (coefficient-range inclusion).

Desk scale caps the flattened dimension at 64; continuous lambda1 sets are
handled through explicit quadrature weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence, Union

import numpy as np

from .bracket import CheckReport, _report
from .errors import (
    ConfigError,
    DimensionCapError,
    DimensionMismatchError,
    UndefinedBoundsError,
)
from .fields import DenseEntry, FiberElement, OperatorField, fiberize, to_dense, RankOneEntry
from .grid import LatticeSpec

DIMENSION_CAP = 64
SVD_CUTOFF_FACTOR = 1e-9


@dataclass(frozen=True)
class FiberSystem:
    """A weighted finite family of flat fiber vectors at one alpha."""

    alpha: float
    vectors: np.ndarray  # (N, D), rows are vectors
    weights: np.ndarray  # (N,), positive quadrature weights
    labels: tuple = ()
    layout: tuple = ()

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.complex128, copy=True)
        if vec.ndim != 2 or vec.shape[0] < 1:
            raise ConfigError("fiber system needs a nonempty (N, D) vector array")
        wts = np.array(self.weights, dtype=float, copy=True)
        if wts.shape != (vec.shape[0],):
            raise ConfigError("fiber system needs one weight per vector")
        if np.any(wts <= 0):
            raise ConfigError("quadrature weights must be positive")
        labels = self.labels or tuple(range(vec.shape[0]))
        if len(labels) != vec.shape[0]:
            raise ConfigError("fiber system needs one label per vector")
        vec.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def from_vectors(cls, alpha, vectors, weights=None, labels=()) -> "FiberSystem":
        vec = np.asarray(vectors, dtype=np.complex128)
        if weights is None:
            weights = np.ones(vec.shape[0])
        return cls(float(alpha), vec, weights, labels)


@dataclass(frozen=True)
class RangeBasis:
    """Orthonormal basis spanning the fiber range J(alpha) numerically."""

    alpha: float
    basis: np.ndarray  # (rank, D) orthonormal rows
    rank: int
    svd_cutoff: float


@dataclass(frozen=True)
class FiberCoefficient:
    """Analysis coefficients <f, pi~(lambda1) F phi_k(alpha)> per (k, lambda1)."""

    values: np.ndarray
    labels: tuple


@dataclass(frozen=True)
class DualReport:
    """Outcome of a dual classification at one fiber."""

    alternate: bool
    oblique: bool
    type_i: bool
    type_ii: bool
    prerequisite_ok: bool
    tolerance: float
    residuals: dict = dc_field(default_factory=dict)
    witnesses: dict = dc_field(default_factory=dict)
    frame_bounds: Optional[tuple] = None


# ---------------------------------------------------------------------------
# materialization


def _entry_to_dense(terms) -> Optional[DenseEntry]:
    """Sum a tuple of entry terms into one dense kernel (None if empty)."""
    from .fields import _align_dense

    acc: Optional[DenseEntry] = None
    for t in terms:
        d = to_dense(t) if isinstance(t, RankOneEntry) else t
        if acc is None:
            acc = d
        else:
            acc, d = _align_dense(acc, d)
            acc = DenseEntry(
                acc.matrix + d.matrix, acc.left_x0, acc.left_dx, acc.right_x0, acc.right_dx
            )
    return acc


def _common_layout(elements: Sequence[FiberElement]) -> tuple:
    """Per-m grid layout (left/right origin, spacing, size) covering all elements."""
    M = elements[0].M
    layout = []
    for m in range(-M, M + 1):
        boxes = []
        for fe in elements:
            d = _entry_to_dense(fe.entry(m))
            if d is not None:
                boxes.append(d)
        if not boxes:
            layout.append(None)
            continue
        ldx = boxes[0].left_dx
        rdx = boxes[0].right_dx
        lx0 = min(b.left_x0 for b in boxes)
        rx0 = min(b.right_x0 for b in boxes)
        ln = max(int(round((b.left_x0 - lx0) / ldx)) + b.matrix.shape[0] for b in boxes)
        rn = max(int(round((b.right_x0 - rx0) / rdx)) + b.matrix.shape[1] for b in boxes)
        layout.append((lx0, ldx, ln, rx0, rdx, rn))
    return tuple(layout)


def flatten_fiber(fe: FiberElement, layout: tuple) -> np.ndarray:
    """Flatten a fiber element against a fixed layout.

    Kernel values are scaled by sqrt(dx_left dx_right) so that the flat
    Euclidean inner product reproduces the quadrature HS inner product.
    """
    parts = []
    for m, box in zip(fe.ms(), layout):
        if box is None:
            continue
        lx0, ldx, ln, rx0, rdx, rn = box
        block = np.zeros((ln, rn), dtype=np.complex128)
        d = _entry_to_dense(fe.entry(m))
        if d is not None:
            kl = int(round((d.left_x0 - lx0) / ldx))
            kr = int(round((d.right_x0 - rx0) / rdx))
            block[kl : kl + d.matrix.shape[0], kr : kr + d.matrix.shape[1]] = d.matrix
        parts.append((block * np.sqrt(ldx * rdx)).ravel())
    if not parts:
        return np.zeros(1, dtype=np.complex128)
    return np.concatenate(parts)


def build_fiber_system(
    generators: Sequence[OperatorField],
    lattice: LatticeSpec,
    lambda1_sample: Sequence[tuple[float, float]],
    alpha: float,
    M: int = 0,
    weights: Optional[Sequence[float]] = None,
) -> FiberSystem:
    """Materialize { pi~_alpha(lambda1) F phi_k(alpha) } as a FiberSystem.

    ``lambda1_sample`` lists the lambda1 points (continuous sets enter
    through their quadrature ``weights``; counting measure is the default).
    The flattened dimension is capped at DIMENSION_CAP.
    """
    generators = list(generators)
    if not generators:
        raise ConfigError("empty generator family")
    lam = [(float(x), float(y)) for (x, y) in lambda1_sample]
    if not lam:
        raise ConfigError("empty lambda1 sample")
    if weights is None:
        w = np.ones(len(lam))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(lam),):
            raise ConfigError("one weight per lambda1 sample point required")
    elements = []
    labels = []
    for k, gen in enumerate(generators):
        base = fiberize(gen, alpha, M)
        for j, l1 in enumerate(lam):
            fe = base.apply_pi(l1) if l1 != (0.0, 0.0) else base
            elements.append(fe)
            labels.append((k, j))
    layout = _common_layout(elements)
    dim = sum(box[2] * box[5] for box in layout if box is not None)
    if dim > DIMENSION_CAP:
        raise DimensionCapError(
            f"flattened fiber dimension {dim} exceeds the desk-scale cap {DIMENSION_CAP}"
        )
    vectors = np.stack([flatten_fiber(fe, layout) for fe in elements])
    sys_weights = np.concatenate([w for _ in generators])
    return FiberSystem(float(alpha), vectors, sys_weights, tuple(labels), layout)


# ---------------------------------------------------------------------------
# linear algebra


def fiber_gram(system: FiberSystem) -> np.ndarray:
    """G[(i),(j)] = sqrt(w_i w_j) <u_i, u_j>, Hermitian PSD."""
    sw = np.sqrt(system.weights)
    scaled = system.vectors * sw[:, None]
    return scaled @ scaled.conj().T


def range_basis(system: FiberSystem, cutoff_factor: float = SVD_CUTOFF_FACTOR) -> RangeBasis:
    """Orthonormal basis of J(alpha) = span of the system vectors (SVD)."""
    _, svals, vh = np.linalg.svd(system.vectors, full_matrices=False)
    smax = svals[0] if svals.size else 0.0
    cutoff = cutoff_factor * smax
    rank = int(np.sum(svals > cutoff))
    return RangeBasis(system.alpha, vh[:rank], rank, float(cutoff))


def fiber_frame_bounds(
    system: FiberSystem, cutoff_factor: float = SVD_CUTOFF_FACTOR
) -> tuple[float, float]:
    """(A, B): extreme nonzero eigenvalues of the Gram (frame bounds on J)."""
    g = fiber_gram(system)
    evals = np.linalg.eigvalsh(g)
    top = float(evals[-1]) if evals.size else 0.0
    if top <= 0.0:
        raise UndefinedBoundsError("frame bounds are undefined for the zero system")
    cutoff = cutoff_factor * top
    nonzero = evals[evals > cutoff]
    return float(nonzero[0]), float(nonzero[-1])


def _mixed_frame_matrix(syn: FiberSystem, ana: FiberSystem) -> np.ndarray:
    """S h = sum_i w_i <h, ana_i> syn_i as a (D, D) matrix."""
    return (syn.vectors.T * syn.weights) @ ana.vectors.conj()


def _check_same_index(a: FiberSystem, b: FiberSystem):
    if a.n != b.n or a.dim != b.dim:
        raise DimensionMismatchError("systems must share index set and dimension")
    if not np.allclose(a.weights, b.weights, rtol=0, atol=1e-14):
        raise DimensionMismatchError("systems must share quadrature weights")


def check_fiber_dual(
    system: FiberSystem,
    dual: FiberSystem,
    tol: float,
    oblique: bool = False,
) -> CheckReport:
    """Residual of the dual reproducing identity on J(alpha).

    Maximizes ||S' h - h|| over an orthonormal basis of J(alpha), where S'
    analyzes against the dual family and synthesizes with the primary one.
    With ``oblique`` the role-swapped residual is included as well.
    """
    _check_same_index(system, dual)
    rb = range_basis(system)
    if rb.rank == 0:
        return _report(0.0, tol, details={"note": "zero system"})
    s_mixed = _mixed_frame_matrix(system, dual)
    resid = s_mixed @ rb.basis.T - rb.basis.T  # (D, rank)
    alt = float(np.max(np.linalg.norm(resid, axis=0)))
    worst = alt
    details = {"alternate_residual": alt}
    if oblique:
        rb2 = range_basis(dual)
        if rb2.rank > 0:
            s_swap = _mixed_frame_matrix(dual, system)
            resid2 = s_swap @ rb2.basis.T - rb2.basis.T
            swp = float(np.max(np.linalg.norm(resid2, axis=0)))
        else:
            swp = 0.0
        details["oblique_residual"] = swp
        worst = max(worst, swp)
    return _report(worst, tol, details=details)


def _analysis_matrix(system: FiberSystem) -> np.ndarray:
    """Row i maps h to sqrt(w_i) <h, u_i>."""
    return np.sqrt(system.weights)[:, None] * system.vectors.conj()


def classify_dual_type(
    system: FiberSystem,
    dual: FiberSystem,
    tol: float,
    cutoff_factor: float = SVD_CUTOFF_FACTOR,
) -> DualReport:
    """Classify a candidate dual family at one fiber.

    Alternate duality is the prerequisite; when it fails the type flags are
    reported False with prerequisite_ok False.  type-I tests membership of
    every dual vector in J(alpha); type-II tests inclusion of the analysis
    ranges by a rank test on the stacked coefficient matrices.
    """
    alt_rep = check_fiber_dual(system, dual, tol)
    obl_rep = check_fiber_dual(system, dual, tol, oblique=True)
    alternate = alt_rep.verdict
    oblique = bool(obl_rep.verdict)
    residuals = {
        "alternate": alt_rep.details.get("alternate_residual", 0.0),
        "oblique": obl_rep.details.get("oblique_residual", 0.0),
    }
    witnesses: dict = {}
    if not alternate:
        return DualReport(
            alternate=False,
            oblique=False,
            type_i=False,
            type_ii=False,
            prerequisite_ok=False,
            tolerance=float(tol),
            residuals=residuals,
            witnesses={"alternate": "reproducing identity fails on J(alpha)"},
            frame_bounds=None,
        )

    rb = range_basis(system, cutoff_factor)
    # coefficients <u'_i, b_r>, then the in-plane parts sum_r coef b_r
    coef = dual.vectors @ rb.basis.conj().T
    norms = np.linalg.norm(dual.vectors, axis=1)
    out_of_plane = dual.vectors - coef @ rb.basis
    rel = np.linalg.norm(out_of_plane, axis=1) / np.maximum(norms, 1e-300)
    rel[norms == 0.0] = 0.0
    type_i_residual = float(rel.max())
    type_i = type_i_residual <= tol
    if not type_i:
        witnesses["type_i"] = dual.labels[int(np.argmax(rel))]
    residuals["type_i_projection"] = type_i_residual

    ma = _analysis_matrix(system)
    mb = _analysis_matrix(dual)
    stacked = np.hstack([ma, mb])
    s_stacked = np.linalg.svd(stacked, compute_uv=False)
    cutoff = cutoff_factor * (s_stacked[0] if s_stacked.size else 0.0)
    rank_a = int(np.sum(np.linalg.svd(ma, compute_uv=False) > cutoff))
    rank_stacked = int(np.sum(s_stacked > cutoff))
    type_ii = rank_stacked == rank_a
    residuals["type_ii_rank_excess"] = rank_stacked - rank_a
    if not type_ii:
        witnesses["type_ii"] = f"analysis range grows by {rank_stacked - rank_a}"

    bounds = fiber_frame_bounds(system, cutoff_factor)
    return DualReport(
        alternate=True,
        oblique=oblique,
        type_i=bool(type_i),
        type_ii=bool(type_ii),
        prerequisite_ok=True,
        tolerance=float(tol),
        residuals=residuals,
        witnesses=witnesses,
        frame_bounds=bounds,
    )


def fiber_coefficients(
    f: Union[np.ndarray, FiberElement],
    system: FiberSystem,
) -> FiberCoefficient:
    """Analysis coefficients of f against the system family."""
    if isinstance(f, FiberElement):
        if not system.layout:
            raise DimensionMismatchError("system carries no layout for fiber elements")
        vec = flatten_fiber(f, system.layout)
    else:
        vec = np.asarray(f, dtype=np.complex128)
    if vec.shape != (system.dim,):
        raise DimensionMismatchError(
            f"vector dimension {vec.shape} does not match system dimension {system.dim}"
        )
    values = system.vectors.conj() @ vec
    return FiberCoefficient(values, system.labels)


def canonical_dual(system: FiberSystem) -> FiberSystem:
    """Pseudo-inverse dual: u'_i = S^+ u_i with S the weighted frame operator.

    Lies inside J(alpha) and reproduces on it, hence alternate, type-I and
    type-II; the reference construction for oracles and instances.
    """
    s_op = _mixed_frame_matrix(system, system)
    s_pinv = np.linalg.pinv(s_op, rcond=1e-12, hermitian=True)
    dual_vectors = system.vectors @ s_pinv.T
    return FiberSystem(system.alpha, dual_vectors, system.weights, system.labels, system.layout)
