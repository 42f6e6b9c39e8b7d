import math

import numpy as np
import pytest

from heisenframe.errors import ConfigError, DimensionMismatchError, ParameterError
from heisenframe.fields import (
    DenseEntry,
    FiberElement,
    RankOneEntry,
    ScaleSpec,
    build_Ht,
    dense_field,
    entry_hs_norm,
    field_norm2,
    fiberize,
    hs_inner,
    pfaffian_weight,
    to_dense,
)
from heisenframe.grid import SampledWindow, TorusGrid, inner_product, window_preset
from heisenframe.parallel import pairwise_sum
from heisenframe.schrodinger import dilate


class TestPfaffianWeight:
    def test_values(self):
        assert pfaffian_weight(0.5, 1) == 0.5
        assert pfaffian_weight(0.0, 2) == 0.0
        assert pfaffian_weight(-0.3, 2) == pytest.approx(0.09)

    def test_dimension_guard(self):
        with pytest.raises(ParameterError):
            pfaffian_weight(0.5, 0)


class TestBuildHt:
    def test_parameter_range(self, box):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ParameterError):
                build_Ht(box, bad)

    def test_zero_generator_rejected(self, box):
        zero = SampledWindow(np.zeros(box.n), box.x0, box.dx)
        with pytest.raises(ParameterError):
            build_Ht(zero, 0.5)

    def test_field_norm2_analytic(self, box):
        # integral of sigma over (1/2, 1] is 3/8
        H = build_Ht(box, 0.5)
        assert abs(field_norm2(H) - 0.375) < 1e-8

    def test_off_support_zero(self, box):
        H = build_Ht(box, 0.5)
        assert H.evaluate(0.4) is None
        assert H.hs_norm_at(0.4) == 0.0

    def test_unit_projection_norm_on_support(self, box):
        H = build_Ht(box, 0.5)
        for s in (0.51, 0.75, 1.0):
            assert abs(H.hs_norm_at(s) - 1.0) < 1e-10

    def test_scaled_field_hs_norm(self, box):
        H = build_Ht(box, 0.5, ScaleSpec("power", -1.0))
        for s in (0.6, 0.9):
            assert abs(H.hs_norm_at(s) - s ** -1.0) < 1e-10


class TestScaleSpec:
    def test_const(self):
        assert ScaleSpec("const", 2.5)(0.3) == 2.5

    def test_power(self):
        assert ScaleSpec("power", -2.0)(0.5) == pytest.approx(4.0)

    def test_power_needs_positive_sigma(self):
        with pytest.raises(ParameterError):
            ScaleSpec("power", 0.5)(-1.0)

    def test_whitelist(self):
        with pytest.raises(ConfigError):
            ScaleSpec("exp", 1.0)


class TestHsInner:
    def test_projection_norm_one(self, box):
        e = RankOneEntry(1.0, box, box)
        assert abs(hs_inner(e, e) - 1.0) < 1e-12

    def test_cross_projections(self, box, halfbox):
        # <v (x) v, w (x) w> = |<v, w>|^2
        ev = RankOneEntry(1.0, box, box)
        ew = RankOneEntry(1.0, halfbox, halfbox)
        want = abs(inner_product(box, halfbox)) ** 2
        assert abs(hs_inner(ev, ew) - want) < 1e-12

    def test_zero_operator(self, box):
        e = RankOneEntry(1.0, box, box)
        assert hs_inner(e, None) == 0.0
        assert hs_inner(None, None) == 0.0

    def test_rank_one_vs_dense_8_point(self, rng):
        # dense kernels on an 8-point grid must reproduce the rank-one formula
        n = 8
        mk = lambda: SampledWindow(rng.standard_normal(n) + 1j * rng.standard_normal(n), 0.0, 1.0 / n)
        for _ in range(25):
            a = RankOneEntry(complex(rng.normal(), rng.normal()), mk(), mk())
            b = RankOneEntry(complex(rng.normal(), rng.normal()), mk(), mk())
            fast = hs_inner(a, b)
            dense = hs_inner(to_dense(a), to_dense(b))
            assert abs(fast - dense) < 1e-12

    def test_dimension_mismatch(self):
        a = DenseEntry(np.eye(3), 0.0, 0.25, 0.0, 0.25)
        b = DenseEntry(np.eye(4), 0.0, 0.5, 0.0, 0.5)
        with pytest.raises(DimensionMismatchError):
            hs_inner(a, b)

    def test_entry_sums(self, box, halfbox):
        pair = (RankOneEntry(1.0, box, box), RankOneEntry(0.5, halfbox, halfbox))
        lhs = hs_inner(pair, pair)
        expand = (
            hs_inner(pair[0], pair[0])
            + hs_inner(pair[0], pair[1])
            + hs_inner(pair[1], pair[0])
            + hs_inner(pair[1], pair[1])
        )
        assert abs(lhs - expand) < 1e-12


class TestFiberize:
    def test_single_entry_on_support(self, box):
        H = build_Ht(box, 0.5)
        fe = fiberize(H, 0.75, 3)
        for m in fe.ms():
            norm = entry_hs_norm(fe.entry(m))
            if m == 0:
                assert abs(norm - math.sqrt(0.75)) < 1e-10
            else:
                assert norm == 0.0

    def test_below_support_all_zero(self, box):
        H = build_Ht(box, 0.5)
        fe = fiberize(H, 0.25, 3)
        assert fe.is_zero()

    def test_zero_field(self, box):
        H = build_Ht(box, 0.5, ScaleSpec("const", 0.0))
        assert fiberize(H, 0.75, 2).is_zero()

    def test_linearity_in_dense_fields(self, rng):
        sigmas = [0.3, 0.7]
        mk = lambda: DenseEntry(
            rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)), 0.0, 0.25, 0.0, 0.25
        )
        ea, eb = [mk() for _ in sigmas], [mk() for _ in sigmas]
        esum = [
            DenseEntry(a.matrix + b.matrix, a.left_x0, a.left_dx, a.right_x0, a.right_dx)
            for a, b in zip(ea, eb)
        ]
        fa = fiberize(dense_field(sigmas, ea), 0.3, 1)
        fb = fiberize(dense_field(sigmas, eb), 0.3, 1)
        fs = fiberize(dense_field(sigmas, esum), 0.3, 1)
        assert abs(fs.inner(fs) - fa.add(fb).inner(fa.add(fb))) < 1e-12

    def test_truncation_mismatch(self, box):
        H = build_Ht(box, 0.5)
        with pytest.raises(DimensionMismatchError):
            fiberize(H, 0.75, 1).inner(fiberize(H, 0.75, 2))


class TestFiberElementAlgebra:
    def test_apply_pi_preserves_norm_for_modulations(self, box):
        H = build_Ht(box, 0.5)
        fe = fiberize(H, 0.8, 1)
        moved = fe.apply_pi((0.0, 2.0))
        assert abs(moved.norm() - fe.norm()) < 1e-10

    def test_scaled(self, box):
        fe = fiberize(build_Ht(box, 0.5), 0.8, 1)
        assert abs(fe.scaled(2.0).norm() - 2.0 * fe.norm()) < 1e-12

    def test_compact_merges_shared_right_factors(self, box):
        va = dilate(box, 0.8)
        terms = (RankOneEntry(1.0, va, va), RankOneEntry(-1.0, va, va))
        fe = FiberElement(0.8, 0, (terms,))
        assert fe.compact().norm() < 1e-14


class TestPlancherelConsistency:
    @pytest.mark.parametrize("preset,support", [("box", (0.0, 1.0)), ("gaussian", (-8.0, 8.0))])
    def test_torus_sum_matches_field_norm(self, preset, support, grid512):
        from heisenframe.bracket import bracket

        v = window_preset(preset, 4096, support)
        H = build_Ht(v, 0.5)
        tf = bracket(H, H, grid512)
        torus_side = pairwise_sum(list(tf.values.real)) * grid512.weight
        field_side = field_norm2(H)
        assert abs(torus_side - field_side) <= 1e-6 * abs(field_side)
