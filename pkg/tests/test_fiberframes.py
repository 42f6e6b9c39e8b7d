import numpy as np
import pytest

from heisenframe.errors import (
    ConfigError,
    DimensionCapError,
    DimensionMismatchError,
    UndefinedBoundsError,
)
from heisenframe.fiberframes import (
    FiberSystem,
    build_fiber_system,
    canonical_dual,
    check_fiber_dual,
    classify_dual_type,
    fiber_coefficients,
    fiber_frame_bounds,
    fiber_gram,
    flatten_fiber,
    range_basis,
)
from heisenframe.fields import ScaleSpec, build_Ht, fiberize
from heisenframe.grid import LatticeSpec, window_preset


def random_system(rng, n, dim, alpha=0.5, rank=None):
    vec = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    if rank is not None and rank < min(n, dim):
        mix = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        base = rng.standard_normal((rank, dim)) + 1j * rng.standard_normal((rank, dim))
        vec = mix @ base
    return FiberSystem.from_vectors(alpha, vec)


def orthonormal_system(rng, n, dim, alpha=0.5):
    q, _ = np.linalg.qr(rng.standard_normal((dim, n)) + 1j * rng.standard_normal((dim, n)))
    return FiberSystem.from_vectors(alpha, q.T[:n])


def project_out(rng, system, dim):
    """A unit vector orthogonal to the span of the system."""
    rb = range_basis(system)
    q = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    q = q - (q @ rb.basis.conj().T) @ rb.basis
    return q / np.linalg.norm(q)


class TestBuildFiberSystem:
    def test_single_generator_identity_sample(self, rng):
        v = window_preset("box", 6, (0.0, 1.0))
        H = build_Ht(v, 0.5)
        sys_ = build_fiber_system([H], LatticeSpec(1.0, 1.0, 1), [(0.0, 0.0)], alpha=0.8, M=0)
        fe = fiberize(H, 0.8, 0)
        ref = flatten_fiber(fe, sys_.layout)
        assert np.allclose(sys_.vectors[0], ref)
        assert abs(np.vdot(sys_.vectors[0], sys_.vectors[0]).real - fe.inner(fe).real) < 1e-12

    def test_gram_is_alpha_times_identity(self, rng):
        # orthogonality-passing modulation sample: Gram of the translated
        # family is the self-bracket value alpha on the diagonal
        v = window_preset("half-box-sqrt2", 8, (0.0, 1.0))
        H = build_Ht(v, 0.55)
        lam = [(0.0, n * 2.0) for n in (-1, 0, 1)]
        sys_ = build_fiber_system([H], LatticeSpec(1.0, 2.0, 1), lam, alpha=0.8, M=0)
        G = fiber_gram(sys_)
        assert np.max(np.abs(G - 0.8 * np.eye(3))) < 1e-12

    def test_zero_generator_zero_vectors(self):
        v = window_preset("box", 6, (0.0, 1.0))
        H = build_Ht(v, 0.5, ScaleSpec("const", 0.0))
        sys_ = build_fiber_system([H], LatticeSpec(1.0, 1.0, 1), [(0.0, 0.0)], alpha=0.8, M=0)
        assert np.all(sys_.vectors == 0)
        assert range_basis(sys_).rank == 0

    def test_empty_family_rejected(self):
        with pytest.raises(ConfigError):
            build_fiber_system([], LatticeSpec(1.0, 1.0, 1), [(0.0, 0.0)], alpha=0.5)

    def test_dimension_cap(self):
        v = window_preset("box", 16, (0.0, 1.0))
        H = build_Ht(v, 0.5)
        with pytest.raises(DimensionCapError):
            build_fiber_system([H], LatticeSpec(1.0, 1.0, 1), [(0.0, 0.0)], alpha=0.8, M=0)


class TestGram:
    def test_orthonormal_identity(self, rng):
        sys_ = orthonormal_system(rng, 4, 7)
        assert np.max(np.abs(fiber_gram(sys_) - np.eye(4))) < 1e-12

    def test_single_vector(self, rng):
        v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        sys_ = FiberSystem.from_vectors(0.3, v[None, :])
        g = fiber_gram(sys_)
        assert g.shape == (1, 1)
        assert abs(g[0, 0] - np.vdot(v, v)) < 1e-12

    def test_proportional_vectors_rank_one(self, rng):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        sys_ = FiberSystem.from_vectors(0.3, np.stack([v, 2.0 * v]))
        g = fiber_gram(sys_)
        assert abs(np.linalg.det(g)) < 1e-12

    def test_positive_semidefinite_property(self, rng):
        for _ in range(20):
            sys_ = random_system(rng, int(rng.integers(1, 7)), int(rng.integers(1, 7)))
            evals = np.linalg.eigvalsh(fiber_gram(sys_))
            assert evals.min() >= -1e-10


class TestFrameBounds:
    def test_orthonormal_bounds(self, rng):
        sys_ = orthonormal_system(rng, 3, 6)
        A, B = fiber_frame_bounds(sys_)
        assert abs(A - 1.0) < 1e-10
        assert abs(B - 1.0) < 1e-10

    def test_scaling_homogeneity(self, rng):
        sys_ = random_system(rng, 4, 5)
        c = 1.7 - 0.4j
        scaled = FiberSystem.from_vectors(sys_.alpha, sys_.vectors * c)
        A1, B1 = fiber_frame_bounds(sys_)
        A2, B2 = fiber_frame_bounds(scaled)
        assert A2 == pytest.approx(abs(c) ** 2 * A1, rel=1e-10)
        assert B2 == pytest.approx(abs(c) ** 2 * B1, rel=1e-10)

    def test_against_dense_eigensolve(self, rng):
        # 4 vectors in dimension 3: compare with the frame operator spectrum
        sys_ = random_system(rng, 4, 3)
        A, B = fiber_frame_bounds(sys_)
        S = (sys_.vectors.T * sys_.weights) @ sys_.vectors.conj()
        evals = np.linalg.eigvalsh(S)
        nz = evals[evals > 1e-9 * evals.max()]
        assert A == pytest.approx(float(nz.min()), rel=1e-9)
        assert B == pytest.approx(float(nz.max()), rel=1e-9)

    def test_zero_system_rejected(self):
        sys_ = FiberSystem.from_vectors(0.5, np.zeros((2, 3), dtype=complex))
        with pytest.raises(UndefinedBoundsError):
            fiber_frame_bounds(sys_)


class TestCheckFiberDual:
    def test_rank_one_reduces_to_bracket_condition(self, rng):
        # one generator, lambda1 = {0}: <h, psi^> phi^ = h on span{phi^} iff
        # <phi^, psi^> = 1
        v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        v = v / np.linalg.norm(v)
        sys_ = FiberSystem.from_vectors(0.4, v[None, :])
        good = FiberSystem.from_vectors(0.4, v[None, :])  # <v, v> = 1
        assert check_fiber_dual(sys_, good, 1e-10).verdict
        bad = FiberSystem.from_vectors(0.4, (1.3 * v)[None, :])
        rep = check_fiber_dual(sys_, bad, 1e-10)
        assert not rep.verdict
        assert rep.max_violation == pytest.approx(0.3, abs=1e-10)

    def test_parseval_self_dual(self, rng):
        sys_ = orthonormal_system(rng, 4, 6)
        rep = check_fiber_dual(sys_, sys_, 1e-10, oblique=True)
        assert rep.verdict
        assert rep.max_violation < 1e-10

    def test_pinv_dual_and_perturbation(self, rng):
        for _ in range(5):
            sys_ = random_system(rng, 5, 8, rank=4)
            dual = canonical_dual(sys_)
            assert check_fiber_dual(sys_, dual, 1e-9).verdict
            eps = 1e-3
            pert = dual.vectors.copy()
            direction = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            rb = range_basis(sys_)
            in_plane = (direction @ rb.basis.conj().T) @ rb.basis
            in_plane /= np.linalg.norm(in_plane)
            pert[0] += eps * in_plane
            rep = check_fiber_dual(sys_, FiberSystem.from_vectors(sys_.alpha, pert), 1e-9)
            assert not rep.verdict
            assert 1e-4 < rep.max_violation < 1e-2  # residual tracks the perturbation

    def test_index_mismatch(self, rng):
        a = random_system(rng, 3, 4)
        b = random_system(rng, 2, 4)
        with pytest.raises(DimensionMismatchError):
            check_fiber_dual(a, b, 1e-9)

    def test_continuous_sample_first_order_refinement(self):
        # left-endpoint quadrature of a smooth curve of vectors: the dual
        # residual against the continuum dual decays ~ 1/N
        D = 3
        S = np.array([[1 / (j + k + 1) for k in range(D)] for j in range(D)])  # moment matrix
        S_inv = np.linalg.inv(S)

        def residual(N):
            s = np.arange(N) / N
            U = np.stack([s**k for k in range(D)], axis=1).astype(complex)
            weights = np.full(N, 1.0 / N)
            sys_ = FiberSystem(0.5, U, weights)
            dual = FiberSystem(0.5, U @ S_inv.T, weights)
            return check_fiber_dual(sys_, dual, 1e-12).max_violation

        r1, r2 = residual(200), residual(400)
        assert 1.5 <= r1 / r2 <= 3.0


class TestClassify:
    def test_canonical_dual_all_flags(self, rng):
        sys_ = random_system(rng, 4, 6, rank=3)
        dr = classify_dual_type(sys_, canonical_dual(sys_), 1e-8)
        assert dr.prerequisite_ok
        assert dr.alternate and dr.oblique and dr.type_i and dr.type_ii

    def test_out_of_plane_component_breaks_type_i(self, rng):
        sys_ = random_system(rng, 4, 7, rank=3)
        dual = canonical_dual(sys_)
        q = project_out(rng, sys_, 7)
        vec = dual.vectors.copy()
        vec[2] += 0.7 * q
        dr = classify_dual_type(sys_, FiberSystem.from_vectors(sys_.alpha, vec), 1e-8)
        assert dr.alternate  # reproducing on J unchanged by the orthogonal part
        assert not dr.type_i
        assert dr.residuals["type_i_projection"] > 0.1

    def test_orthonormal_self_dual_all_true(self, rng):
        sys_ = orthonormal_system(rng, 3, 5)
        dr = classify_dual_type(sys_, sys_, 1e-10)
        assert dr.alternate and dr.oblique and dr.type_i and dr.type_ii
        assert dr.frame_bounds == pytest.approx((1.0, 1.0), abs=1e-10)

    def test_prerequisite_failure(self, rng):
        sys_ = random_system(rng, 3, 5)
        other = random_system(rng, 3, 5)
        dr = classify_dual_type(sys_, other, 1e-8)
        assert not dr.prerequisite_ok
        assert not (dr.alternate or dr.oblique or dr.type_i or dr.type_ii)

    def test_monotonicity_flags_require_alternate(self, rng):
        # property: type flags never appear without the alternate flag
        for _ in range(25):
            n, d = int(rng.integers(2, 6)), int(rng.integers(2, 8))
            sys_ = random_system(rng, n, d)
            cand = canonical_dual(sys_) if rng.integers(0, 2) else random_system(rng, n, d)
            dr = classify_dual_type(sys_, cand, 1e-8)
            if dr.type_i or dr.type_ii or dr.oblique:
                assert dr.alternate

    def test_duality_symmetry_reported(self, rng):
        sys_ = random_system(rng, 4, 6, rank=4)
        dr = classify_dual_type(sys_, canonical_dual(sys_), 1e-8)
        assert "oblique" in dr.residuals  # role-swapped residual always present


class TestCoefficients:
    def test_indicator_for_orthonormal_system(self, rng):
        sys_ = orthonormal_system(rng, 4, 6)
        fc = fiber_coefficients(sys_.vectors[2], sys_)
        want = np.zeros(4, dtype=complex)
        want[2] = 1.0
        assert np.max(np.abs(fc.values - want)) < 1e-12

    def test_zero_vector(self, rng):
        sys_ = random_system(rng, 3, 5)
        fc = fiber_coefficients(np.zeros(5, dtype=complex), sys_)
        assert np.all(fc.values == 0)

    def test_against_dense_oracle(self, rng):
        for _ in range(10):
            sys_ = random_system(rng, 5, 8)
            f = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            fc = fiber_coefficients(f, sys_)
            oracle = np.array([np.vdot(u, f) for u in sys_.vectors])
            assert np.max(np.abs(fc.values - oracle)) < 1e-12

    def test_dimension_mismatch(self, rng):
        sys_ = random_system(rng, 3, 5)
        with pytest.raises(DimensionMismatchError):
            fiber_coefficients(np.zeros(4, dtype=complex), sys_)


class TestOracleAgreement:
    """Brute-force oracles for the classification flags."""

    @staticmethod
    def oracle_flags(system, dual, tol):
        U, U2, w = system.vectors, dual.vectors, system.weights
        # projector onto J via SVD of the primary family
        _, s, vh = np.linalg.svd(U, full_matrices=False)
        basis = vh[: int(np.sum(s > 1e-9 * s[0]))]
        P = basis.T @ basis.conj()
        S2 = (U.T * w) @ U2.conj()
        alternate = np.linalg.norm(S2 @ P - P, 2) <= tol * 10
        S2b = (U2.T * w) @ U.conj()
        _, s2, vh2 = np.linalg.svd(U2, full_matrices=False)
        if s2.size and s2[0] > 0:
            basis2 = vh2[: int(np.sum(s2 > 1e-9 * s2[0]))]
            P2 = basis2.T @ basis2.conj()
            oblique = alternate and np.linalg.norm(S2b @ P2 - P2, 2) <= tol * 10
        else:
            oblique = alternate
        type_i = alternate and np.linalg.norm(U2 - U2 @ P.T, 2) <= tol * max(
            1.0, np.linalg.norm(U2, 2)
        )
        ma = np.sqrt(w)[:, None] * U.conj()
        mb = np.sqrt(w)[:, None] * U2.conj()
        # projector residual of mb columns against the column space of ma
        qa, _ = np.linalg.qr(ma)
        ra = np.linalg.matrix_rank(ma, tol=1e-9 * np.linalg.norm(ma, 2))
        qa = qa[:, :ra] if ra else qa[:, :0]
        resid = mb - qa @ (qa.conj().T @ mb)
        type_ii = alternate and np.linalg.norm(resid, 2) <= 1e-7 * max(1.0, np.linalg.norm(mb, 2))
        return alternate, oblique, type_i, type_ii

    def test_flags_match_oracle_on_instances(self, rng):
        agreements = 0
        total = 40
        for i in range(total):
            d = int(rng.integers(2, 9))
            n = int(rng.integers(1, 7))
            rank = int(rng.integers(1, min(n, d) + 1))
            sys_ = random_system(rng, n, d, rank=rank)
            kind = i % 3
            if kind == 0:
                cand = canonical_dual(sys_)
            elif kind == 1:
                cand = canonical_dual(sys_)
                vec = cand.vectors.copy()
                if d > rank:
                    vec[int(rng.integers(0, n))] += 0.5 * project_out(rng, sys_, d)
                cand = FiberSystem.from_vectors(sys_.alpha, vec)
            else:
                cand = random_system(rng, n, d)
            dr = classify_dual_type(sys_, cand, 1e-8)
            got = (dr.alternate, dr.oblique, dr.type_i, dr.type_ii)
            want = self.oracle_flags(sys_, cand, 1e-8)
            assert got == want, (i, d, n, rank, kind, got, want)
            agreements += 1
        assert agreements == total
