"""Tests for the maximal operators."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morrey_lab.exceptions import MemoryGuardError, ParameterDomainError, UndefinedRatioError
from morrey_lab.schemas import MaximalVariant, MorreyParams
from morrey_lab.services.lattice import BoundingBox, FiniteSequence, odd_cube, support_hull
from morrey_lab.services.maximal import (
    boundedness_ratio, certified_sup_maximal, equivalence_check, final_bound_constant,
    maximal_at, maximal_field, maximal_tail_bound, sup_bound_chain, theoretical_constant,
    windowed_morrey_norm_of_maximal
)
from morrey_lab.services.morrey_norm import morrey_norm
from morrey_lab.services.oracles import brute_maximal_at, brute_sup_maximal
from morrey_lab.services.verify_suite import random_sequence
from tests.strategies import morrey_params, points, sequences


DELTA_1D = FiniteSequence.spike((0,))


class TestMaximalAt:
    """Test pinned maximal values."""

    def test_odd_spike_values(self):
        """Test M delta_0(0) = 1 and M delta_0(2) = 1/5."""
        assert maximal_at(DELTA_1D, (0,)) == 1.0
        assert maximal_at(DELTA_1D, (2,)) == 1.0 / 5.0

    def test_even_spike_value(self):
        """Test Mhat delta_0(0) = 1/2 via R_{0,1} = {-1, 0}."""
        assert maximal_at(DELTA_1D, (0,), MaximalVariant.EVEN) == 0.5

    def test_two_dimensional_spike(self):
        """Test M delta_0((1,1)) = 1/9 in Z^2."""
        assert maximal_at(FiniteSequence.spike((0, 0)), (1, 1)) == 1.0 / 9.0

    def test_uncentered_spike(self):
        """Test Mtilde delta_0(0) = 1 from the point cube."""
        assert maximal_at(DELTA_1D, (0,), MaximalVariant.UNCENTERED) == 1.0

    def test_uncentered_off_spike(self):
        """Test Mtilde delta_0(2) = 1/3: S_{1,1} holds both points."""
        assert maximal_at(DELTA_1D, (2,), MaximalVariant.UNCENTERED) == pytest.approx(1 / 3)

    def test_zero_sequence(self):
        """Test that the zero sequence maps to 0."""
        for variant in MaximalVariant:
            assert maximal_at(FiniteSequence.zeros(2), (3, -1), variant) == 0.0

    @settings(max_examples=15)
    @given(sequences(max_half_width=2, signed=True))
    def test_matches_brute_force(self, x):
        """Test all variants against brute force over N <= N_cert + 5."""
        window = support_hull(x).inflate(2)
        for variant in MaximalVariant:
            field = maximal_field(x, window, variant)
            for point in window.points():
                assert field.value_at(point) == pytest.approx(
                    brute_maximal_at(x, point, variant), rel=1e-12
                )

    def test_three_dimensional_oracle(self):
        """Test the odd and even operators in Z^3."""
        rng = np.random.default_rng(103)
        x = random_sequence(rng, 3, 1)
        for point in support_hull(x).inflate(1).points():
            for variant in (MaximalVariant.ODD, MaximalVariant.EVEN):
                assert maximal_at(x, point, variant) == pytest.approx(
                    brute_maximal_at(x, point, variant), rel=1e-12
                )


class TestMaximalField:
    """Test window evaluation."""

    def test_spike_window(self):
        """Test M delta_0 on [-2, 2]."""
        field = maximal_field(DELTA_1D, BoundingBox((-2,), (2,)))
        assert field.values.tolist() == [1 / 5, 1 / 3, 1.0, 1 / 3, 1 / 5]

    def test_cube_indicator_center(self):
        """Test M chi_{S_{0,1}}(0) = 1."""
        x = FiniteSequence.indicator(odd_cube((0,), 1))
        assert maximal_field(x, BoundingBox((0,), (0,))).values.tolist() == [1.0]

    def test_zero_sequence_field(self):
        """Test that the zero sequence gives an all-zero field."""
        field = maximal_field(FiniteSequence.zeros(1), BoundingBox((-3,), (3,)))
        assert not field.values.any()

    def test_thread_count_does_not_change_values(self):
        """Test bit-identical fields for 1 and 3 threads."""
        rng = np.random.default_rng(107)
        x = random_sequence(rng, 2, 3)
        window = support_hull(x).inflate(3)
        for variant in MaximalVariant:
            one = maximal_field(x, window, variant, threads=1).values
            three = maximal_field(x, window, variant, threads=3).values
            assert np.array_equal(one, three)

    def test_field_agrees_with_pointwise(self):
        """Test that maximal_at and maximal_field agree exactly."""
        rng = np.random.default_rng(109)
        x = random_sequence(rng, 1, 4)
        window = support_hull(x).inflate(5)
        for variant in MaximalVariant:
            field = maximal_field(x, window, variant)
            for point in window.points():
                assert field.value_at(point) == maximal_at(x, point, variant)

    def test_memory_guard(self):
        """Test that oversized windows are refused."""
        with pytest.raises(MemoryGuardError):
            maximal_field(DELTA_1D, BoundingBox((-100,), (100,)), cell_limit=50)

    def test_empty_window_rejected(self):
        """Test that the window must be nonempty."""
        with pytest.raises(ValueError):
            maximal_field(DELTA_1D, BoundingBox.empty(1))


class TestPointwiseBounds:
    """Test domination, tail bounds and the global sup."""

    @given(sequences(max_half_width=2, signed=True))
    def test_dominates_absolute_value(self, x):
        """Test Mx(m) >= |x(m)| and Mtilde >= M."""
        window = support_hull(x)
        odd = maximal_field(x, window, MaximalVariant.ODD)
        unc = maximal_field(x, window, MaximalVariant.UNCENTERED)
        for point in window.points():
            assert odd.value_at(point) >= abs(x.value_at(point)) * (1 - 1e-12)
            assert unc.value_at(point) >= odd.value_at(point)

    def test_tail_bound_examples(self):
        """Test the tail bound on a spike and a cube indicator."""
        assert maximal_tail_bound(DELTA_1D, (3,)) == 1 / 7
        assert maximal_at(DELTA_1D, (3,)) == 1 / 7
        x = FiniteSequence.indicator(odd_cube((0,), 1))
        assert maximal_tail_bound(x, (4,)) == pytest.approx(3 / 7)
        assert maximal_at(x, (4,)) == pytest.approx(3 / 11)
        assert maximal_tail_bound(x, (0,)) == 3.0

    @given(sequences(max_half_width=2))
    def test_tail_bound_dominates(self, x):
        """Test Mx(m) <= tail bound around the support."""
        for point in support_hull(x).inflate(6).points():
            assert maximal_at(x, point) <= maximal_tail_bound(x, point) * (1 + 1e-12)

    def test_certified_sup_example(self):
        """Test sup M(1, 2, 3) = 3, attained at m = 2, N = 0."""
        x = FiniteSequence(BoundingBox((0,), (2,)), [1.0, 2.0, 3.0])
        assert certified_sup_maximal(x) == 3.0

    @settings(max_examples=30)
    @given(sequences(dims=(1,), max_half_width=3))
    def test_certified_sup_matches_brute_force(self, x):
        """Test the hull-only sup against a much wider search."""
        assert certified_sup_maximal(x) == pytest.approx(brute_sup_maximal(x), rel=1e-12)

    @given(sequences(dims=(2,), max_half_width=2),
           st.lists(points(2, 10), min_size=1, max_size=10))
    def test_clamp_domination(self, x, outside):
        """Test Mx(m) <= Mx(clamp(m)) at points outside the hull."""
        hull = support_hull(x)
        for m in outside:
            assert maximal_at(x, m) <= maximal_at(x, hull.clamp(m)) * (1 + 1e-12)

    def test_certified_sup_odd_only(self):
        """Test that the global sup is limited to the odd operator."""
        with pytest.raises(ParameterDomainError):
            certified_sup_maximal(DELTA_1D, MaximalVariant.EVEN)

    @given(sequences(dims=(2,), max_half_width=2, signed=True), morrey_params())
    def test_sup_chain_is_nondecreasing(self, x, params):
        """Test sup Mx <= sup power mean <= ||x||_{l^p_q}."""
        sup_m, power_mean, norm = sup_bound_chain(x, params)
        assert sup_m <= power_mean * (1 + 1e-12)
        assert power_mean <= norm * (1 + 1e-12)


class TestEquivalence:
    """Test the pointwise equivalence constants."""

    def test_spike_at_origin(self):
        """Test the three values of delta_0 at 0."""
        report = equivalence_check(DELTA_1D, BoundingBox((0,), (0,)))
        row = report.rows[0]
        assert (row.M, row.Mhat, row.Mtilde) == (1.0, 0.5, 1.0)
        assert row.violations == []

    def test_zero_sequence(self):
        """Test all-zero rows without violations."""
        report = equivalence_check(FiniteSequence.zeros(2), BoundingBox((0, 0), (1, 1)))
        assert report.points_checked == 4
        assert report.violation_count == 0

    @settings(max_examples=30)
    @given(sequences(max_half_width=2, signed=True))
    def test_random_instances(self, x):
        """Test zero violations over hull +- 4."""
        report = equivalence_check(x, support_hull(x).inflate(4))
        assert report.violation_count == 0


class TestBoundedness:
    """Test windowed norms of Mx and the boundedness ratio."""

    def test_spike_p_equal_q_is_not_stabilized(self):
        """Test that the l^2 tail of M delta_0 still moves between L and 2L."""
        windowed = windowed_morrey_norm_of_maximal(DELTA_1D, MorreyParams(p=2, q=2), 8)
        assert not windowed.stabilized
        assert windowed.doubled_value > windowed.value

    def test_spike_p_below_q_stabilizes(self):
        """Test stabilization for p < q on spikes and cube indicators."""
        params = MorreyParams(p=2, q=3)
        for x in (DELTA_1D, FiniteSequence.indicator(odd_cube((0,), 2))):
            windowed = windowed_morrey_norm_of_maximal(x, params, 16)
            assert windowed.stabilized

    def test_spike_lower_bound(self):
        """Test windowed ||M delta_0||_{l^1_2} >= 1 at L = 8."""
        windowed = windowed_morrey_norm_of_maximal(DELTA_1D, MorreyParams(p=1, q=2), 8)
        assert windowed.value >= 1.0 - 1e-12

    def test_outside_bound(self):
        """Test the certified bound of Mx beyond the window."""
        windowed = windowed_morrey_norm_of_maximal(DELTA_1D, MorreyParams(p=2, q=3), 4)
        assert windowed.outside_bound == pytest.approx(1 / 11)

    @settings(max_examples=15)
    @given(sequences(dims=(1,), max_half_width=3), st.floats(1.1, 3.0), st.floats(0.0, 1.0))
    def test_ratio_at_least_one(self, x, p, t):
        """Test ||Mx|| / ||x|| >= 1 for 1 < p <= q."""
        params = MorreyParams(p=p, q=p + t * (4.0 - p))
        ratio = boundedness_ratio(x, params, 8)
        assert np.isfinite(ratio)
        assert ratio >= 1.0 - 1e-12

    def test_ratio_zero_sequence(self):
        """Test that the ratio is undefined for x = 0."""
        with pytest.raises(UndefinedRatioError):
            boundedness_ratio(FiniteSequence.zeros(1), MorreyParams(p=2, q=3), 4)

    def test_ratio_requires_p_above_one(self):
        """Test the 1 < p hypothesis."""
        with pytest.raises(ParameterDomainError):
            boundedness_ratio(DELTA_1D, MorreyParams(p=1, q=2), 4)


class TestTheoreticalConstant:
    """Test the explicit boundedness constant."""

    def test_p_equals_q(self):
        """Test C = 6 at K=1, d=1, p=q=2."""
        assert theoretical_constant(1.0, 1, MorreyParams(p=2, q=2)) == pytest.approx(6.0, rel=1e-9)

    def test_p_below_q(self):
        """Test C = 12 + 6 sqrt(2) at K=1, d=1, p=2, q=4."""
        value = theoretical_constant(1.0, 1, MorreyParams(p=2, q=4))
        assert value == pytest.approx(20.48528, rel=1e-6)
        assert value == pytest.approx(12 + 6 * np.sqrt(2), rel=1e-9)

    def test_linear_in_k(self):
        """Test C(2K) = 2 C(K)."""
        params = MorreyParams(p=1.5, q=3)
        assert theoretical_constant(2.0, 2, params) == pytest.approx(
            2 * theoretical_constant(1.0, 2, params), rel=1e-12
        )

    def test_final_constant(self):
        """Test max(C^{1/p}, 1)."""
        assert final_bound_constant(1.0, 1, MorreyParams(p=2, q=2)) == pytest.approx(np.sqrt(6))

    def test_rejects_bad_k(self):
        """Test K > 0."""
        with pytest.raises(ParameterDomainError):
            theoretical_constant(0.0, 1, MorreyParams(p=2, q=2))

    def test_bound_holds_on_spike(self):
        """Test windowed ||M delta_0|| <= final constant * ||delta_0||."""
        params = MorreyParams(p=2, q=3)
        ratio = boundedness_ratio(DELTA_1D, params, 16)
        assert ratio <= final_bound_constant(1.0, 1, params)
        assert morrey_norm(DELTA_1D, params).value == 1.0
