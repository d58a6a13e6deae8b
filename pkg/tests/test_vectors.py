import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.vectors import (
    ClipSpec, DimensionMismatchError, LatentVector, NormKind, clip, clip_rows,
    l1_distance, l1_norm, l2_norm, norm, reverse_triangle_gap
)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                   allow_infinity=False)
vectors = st.lists(finite, min_size=1, max_size=12).map(LatentVector)
clip_constants = st.floats(min_value=1e-3, max_value=1e3)
norm_kinds = st.sampled_from(list(NormKind))


class TestLatentVector:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            LatentVector([])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            LatentVector([1.0, float('nan')])
        with pytest.raises(ValueError):
            LatentVector([float('inf')])

    def test_rejects_matrix(self):
        with pytest.raises(ValueError):
            LatentVector(np.ones((2, 2)))

    def test_components_are_read_only(self):
        v = LatentVector.of(1.0, 2.0)
        with pytest.raises(ValueError):
            v.components[0] = 5.0

    def test_copies_its_input(self):
        source = np.array([1.0, 2.0])
        v = LatentVector(source)
        source[0] = 9.0
        assert v.tolist() == [1.0, 2.0]

    def test_equality_and_dim(self):
        assert LatentVector.of(1, 2) == LatentVector([1.0, 2.0])
        assert LatentVector.of(1, 2) != LatentVector.of(2, 1)
        assert LatentVector.of(1, 2, 3).dim == 3


class TestNorms:
    def test_l1_examples(self):
        assert l1_norm(LatentVector.of(0, 0, 0)) == 0.0
        assert l1_norm(LatentVector.of(1, -2, 3)) == 6.0

    def test_l2_examples(self):
        assert l2_norm(LatentVector.of(0, 0)) == 0.0
        assert l2_norm(LatentVector.of(3, 4)) == 5.0
        C = 1.5
        a = 2 * C / 3
        assert l2_norm(LatentVector.of(a, a)) == pytest.approx(
            2 * math.sqrt(2) / 3 * C, rel=1e-12)

    def test_large_magnitudes_do_not_overflow(self):
        v = LatentVector.of(1e200, -1e200)
        assert l2_norm(v) == pytest.approx(math.sqrt(2) * 1e200, rel=1e-12)
        assert l1_norm(v) == pytest.approx(2e200, rel=1e-12)
        assert l1_norm(LatentVector.of(1e308, 1e308)) == math.inf

    def test_norm_dispatch(self):
        v = LatentVector.of(3, -4)
        assert norm(v, NormKind.L1) == 7.0
        assert norm(v, 'l2') == 5.0

    def test_distance_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            l1_distance(LatentVector.of(1, 2), LatentVector.of(1, 2, 3))

    @given(vectors)
    def test_l2_never_exceeds_l1(self, v):
        assert l2_norm(v) <= l1_norm(v) * (1 + 1e-12)

    @given(vectors)
    def test_l1_at_most_sqrt_n_times_l2(self, v):
        assert l1_norm(v) <= math.sqrt(v.dim) * l2_norm(v) * (1 + 1e-12) + 1e-300

    @given(st.integers(min_value=1, max_value=8).flatmap(
        lambda n: st.tuples(*[st.lists(finite, min_size=n, max_size=n)] * 3)))
    def test_l1_triangle_inequality(self, triple):
        x, y, z = (LatentVector(values) for values in triple)
        assert l1_distance(x, z) <= l1_distance(x, y) + l1_distance(y, z) + 1e-6


class TestClip:
    def test_examples(self, l2_unit):
        C = 1.0
        a = 2 * C / 3
        inside = LatentVector.of(a, a)
        assert clip(inside, l2_unit) is inside
        small = LatentVector.of(0.1 * C, -0.1 * C)
        assert clip(small, l2_unit) == small
        assert clip(LatentVector.of(3, 4), l2_unit).tolist() == pytest.approx(
            [0.6, 0.8], abs=1e-15)
        assert clip(LatentVector.of(3, 1), ClipSpec(NormKind.L1, 2.0)).tolist() == [1.5, 0.5]

    def test_zero_vector_is_returned_as_is(self, l1_unit, l2_unit):
        zero = LatentVector.of(0, 0, 0)
        assert clip(zero, l1_unit) is zero
        assert clip(zero, l2_unit) is zero

    def test_large_magnitudes_keep_their_direction(self, l2_unit):
        clipped = clip(LatentVector.of(1e200, 1e200), l2_unit)
        assert clipped.tolist() == pytest.approx([math.sqrt(0.5)] * 2, rel=1e-12)
        assert l2_norm(clipped) <= 1.0

        l1_spec = ClipSpec(NormKind.L1, 2.0)
        clipped = clip(LatentVector.of(1e308, -1e308, 5e307), l1_spec)
        assert clipped.tolist() == pytest.approx([0.8, -0.8, 0.4], rel=1e-12)
        assert l1_norm(clipped) <= 2.0

    def test_large_rows_match_single_vector_clip(self):
        matrix = np.array([[1e308, 1e308], [3.0, 4.0], [1e200, -1e200]])
        for kind in NormKind:
            spec = ClipSpec(kind, 1.0)
            clipped = clip_rows(matrix, spec)
            assert not np.any(clipped == 0.0)
            for row, out in zip(matrix, clipped):
                assert clip(LatentVector(row), spec).tolist() == out.tolist()

    def test_rejects_non_positive_clip_constant(self):
        with pytest.raises(ValueError):
            ClipSpec(NormKind.L2, 0.0)
        with pytest.raises(ValueError):
            ClipSpec(NormKind.L2, -1.0)
        with pytest.raises(ValueError):
            ClipSpec('l3', 1.0)

    @given(vectors, clip_constants, norm_kinds)
    def test_output_inside_ball(self, v, C, kind):
        assert norm(clip(v, ClipSpec(kind, C)), kind) <= C

    @given(vectors, clip_constants, norm_kinds)
    def test_idempotent(self, v, C, kind):
        spec = ClipSpec(kind, C)
        once = clip(v, spec)
        assert clip(once, spec) == once

    @given(vectors, clip_constants, norm_kinds)
    def test_preserves_direction(self, v, C, kind):
        clipped = clip(v, ClipSpec(kind, C))
        # non-negative scalar multiple: signs never flip
        assert np.all(np.sign(clipped.components) * np.sign(v.components) >= 0)

    @given(st.integers(min_value=1, max_value=6).flatmap(
        lambda n: st.lists(st.lists(finite, min_size=n, max_size=n),
                           min_size=1, max_size=20)),
           clip_constants, norm_kinds)
    def test_rows_match_single_vector_clip(self, rows, C, kind):
        spec = ClipSpec(kind, C)
        matrix = np.array(rows)
        clipped = clip_rows(matrix, spec)
        for row, out in zip(rows, clipped):
            assert clip(LatentVector(row), spec).tolist() == out.tolist()


class TestReverseTriangle:
    @given(finite, finite, finite)
    def test_gap_is_non_negative(self, a, x, y):
        assert reverse_triangle_gap(a, x, y) >= -1e-9 * max(1.0, abs(a), abs(x), abs(y))

    def test_gap_closes_on_the_far_side(self):
        # a beyond both points on y's side: |x - a| - |y - a| = |x - y|
        assert reverse_triangle_gap(10.0, 1.0, 3.0) == 0.0
