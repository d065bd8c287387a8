"""Tests for lattice geometry, sequences and prefix-sum tables."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morrey_lab.exceptions import (
    LatticeOverflowError, MemoryGuardError, ParameterDomainError
)
from morrey_lab.services.lattice import (
    BoundingBox, Cube, FiniteSequence, Parity, PrefixSumTable,
    cube_cardinality, cube_intersection_cardinality, cube_sum, even_cube,
    guard_cells, indicator_maximal_at, odd_cube, support_hull
)
from morrey_lab.services.maximal import maximal_at
from morrey_lab.services.oracles import (
    brute_intersection_cardinality, direct_box_sum
)
from tests.strategies import cubes, integer_fields, points


def draw_cube_near(data, box):
    """Odd cube centered within two cells of the box, radius up to its side."""
    side = box.max_side
    center = data.draw(points(box.dim, side // 2 + 2))
    shift = (side - 1) // 2
    return odd_cube(tuple(c + shift for c in center), data.draw(st.integers(0, side)))


class TestCubes:
    """Test cube geometry and exact cardinalities."""

    def test_odd_cube_cardinality(self):
        """Test |S_{m,N}| = (2N+1)^d."""
        assert cube_cardinality(odd_cube((0, 0), 2)) == 25
        assert cube_cardinality(odd_cube((5,), 0)) == 1

    def test_even_cube_cardinality(self):
        """Test |R_{m,N}| = (2N)^d and that R drops the upper face."""
        cube = even_cube((0,), 1)
        assert cube_cardinality(cube) == 2
        assert cube.to_box() == BoundingBox((-1,), (0,))

    def test_even_cube_requires_positive_radius(self):
        """Test that R_{m,0} is rejected."""
        with pytest.raises(ParameterDomainError):
            even_cube((0,), 0)

    def test_negative_radius_rejected(self):
        """Test that negative radii are rejected."""
        with pytest.raises(ParameterDomainError):
            odd_cube((0,), -1)

    def test_cardinality_overflow(self):
        """Test that counts beyond int64 raise instead of wrapping."""
        with pytest.raises(LatticeOverflowError):
            cube_cardinality(odd_cube((0, 0, 0), 2**21))

    def test_intersection_examples(self):
        """Test intersection counts of odd cubes."""
        assert cube_intersection_cardinality(odd_cube((0,), 1), odd_cube((2,), 1)) == 1
        assert cube_intersection_cardinality(odd_cube((0, 0), 1), odd_cube((1, 1), 1)) == 4
        assert cube_intersection_cardinality(odd_cube((0,), 1), odd_cube((5,), 1)) == 0

    @given(st.integers(1, 3).flatmap(lambda d: st.tuples(cubes(d, 4, 3), cubes(d, 4, 3))))
    def test_intersection_matches_enumeration(self, pair):
        """Test intersection counts against point-by-point enumeration."""
        c1, c2 = pair
        assert cube_intersection_cardinality(c1, c2) == brute_intersection_cardinality(c1, c2)

    def test_intersection_contained_cube(self):
        """Test that a contained cube intersects in its own cardinality."""
        inner = odd_cube((1, 0), 1)
        outer = odd_cube((0, 0), 3)
        assert cube_intersection_cardinality(inner, outer) == cube_cardinality(inner)


class TestBoundingBox:
    """Test box arithmetic."""

    def test_empty_box(self):
        """Test that the empty box has no points."""
        box = BoundingBox.empty(2)
        assert box.is_empty
        assert box.size == 0
        assert list(box.points()) == []

    def test_row_major_points(self):
        """Test that points iterate in row-major order."""
        box = BoundingBox((0, 0), (1, 1))
        assert list(box.points()) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert box.grid().tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_distance_and_clamp(self):
        """Test sup distance to a box and the coordinate-wise clamp."""
        box = BoundingBox((0, 0), (2, 2))
        assert box.distance((5, 1)) == 3
        assert box.distance((1, 1)) == 0
        assert box.clamp((5, -3)) == (2, 0)
        assert box.farthest_distance((0, 0)) == 2

    def test_memory_guard(self):
        """Test that oversized boxes raise MemoryGuardError."""
        box = BoundingBox((0, 0), (99, 99))
        assert guard_cells(box, cell_limit=10_000) == 10_000
        with pytest.raises(MemoryGuardError):
            guard_cells(box, cell_limit=9_999)


class TestFiniteSequence:
    """Test sequence construction and transforms."""

    def test_from_points_and_hull(self):
        """Test densification and the tight support hull."""
        x = FiniteSequence.from_points({(0, 0): 1.0, (2, -1): 3.0})
        assert x.box == BoundingBox((0, -1), (2, 0))
        assert x.value_at((2, -1)) == 3.0
        assert x.value_at((9, 9)) == 0.0
        assert support_hull(x) == x.box

    def test_hull_ignores_stored_zeros(self):
        """Test that stored zeros do not widen the hull."""
        x = FiniteSequence(BoundingBox((0,), (4,)), [0.0, 0.0, 2.0, 0.0, 0.0])
        assert support_hull(x) == BoundingBox((2,), (2,))

    def test_zero_sequence(self):
        """Test the zero sequence."""
        x = FiniteSequence.zeros(3)
        assert x.is_zero()
        assert support_hull(x).is_empty
        assert x.total_abs() == 0.0

    def test_values_are_read_only(self):
        """Test that sequences are immutable."""
        x = FiniteSequence.spike((0,), 2.0)
        with pytest.raises(ValueError):
            x.values[0] = 5.0

    def test_non_finite_rejected(self):
        """Test that NaN values are rejected."""
        with pytest.raises(ValueError):
            FiniteSequence(BoundingBox((0,), (0,)), [float("nan")])

    def test_shift_and_add(self):
        """Test translation and addition over the union box."""
        x = FiniteSequence.spike((0,), 1.0)
        y = x.shifted((3,)) + x.scaled(2.0)
        assert y.value_at((3,)) == 1.0
        assert y.value_at((0,)) == 2.0
        assert y.box == BoundingBox((0,), (3,))


class TestPrefixSumTable:
    """Test d-dimensional cube sums."""

    def test_integer_field_exact(self):
        """Test that integer fields give exact cube sums."""
        box = BoundingBox((0, 0), (3, 3))
        field = np.arange(16, dtype=float).reshape(4, 4)
        table = PrefixSumTable.build(field, box)
        assert cube_sum(table, odd_cube((1, 1), 1)) == field[0:3, 0:3].sum()
        assert cube_sum(table, odd_cube((10, 10), 1)) == 0.0

    def test_even_cube_sums(self):
        """Test sums over even cubes."""
        box = BoundingBox((0,), (4,))
        table = PrefixSumTable.build(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), box)
        assert cube_sum(table, even_cube((2,), 1)) == 2.0 + 3.0
        assert table.cube_sums(np.array([[2]]), 2, Parity.EVEN)[0] == 1.0 + 2.0 + 3.0 + 4.0

    @settings(max_examples=200)
    @given(integer_fields(), st.data())
    def test_integer_fields_match_enumeration(self, box_and_field, data):
        """Test exact cube sums on integer fields, d in {1, 2, 3}."""
        box, field = box_and_field
        cube = draw_cube_near(data, box)
        table = PrefixSumTable.build(field, box)
        assert cube_sum(table, cube) == direct_box_sum(field, box, cube.to_box())

    @settings(max_examples=200)
    @given(integer_fields(), st.data())
    def test_decimal_fields_match_enumeration(self, box_and_field, data):
        """Test cube sums of non-integer fields to 1e-12 relative."""
        box, field = box_and_field
        field = field / 1000.0 + 1e-3
        cube = draw_cube_near(data, box)
        table = PrefixSumTable.build(field, box)
        expected = direct_box_sum(field, box, cube.to_box())
        assert cube_sum(table, cube) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_small_cube_in_heavy_table(self):
        """Test that a tiny cube sum survives a large table total."""
        box = BoundingBox((0,), (999,))
        field = np.full(1000, 1e12)
        field[500] = 1e-3
        table = PrefixSumTable.build(field, box)
        assert cube_sum(table, odd_cube((500,), 0)) == pytest.approx(1e-3, rel=1e-12)

    def test_negative_field_rejected(self):
        """Test that tables require a nonnegative field."""
        with pytest.raises(ValueError):
            PrefixSumTable.build(np.array([-1.0]), BoundingBox((0,), (0,)))


class TestIndicatorMaximal:
    """Test the closed form of M on cube indicators."""

    def test_matches_maximal_operator(self):
        """Test the closed form against the general maximal operator."""
        for d, n in [(1, 0), (1, 2), (2, 1)]:
            cube = odd_cube((0,) * d, n)
            x = FiniteSequence.indicator(cube)
            for k in BoundingBox.around((0,) * d, 2 * n + 3).points():
                assert indicator_maximal_at(cube, k) == pytest.approx(
                    maximal_at(x, k), rel=1e-12
                )

    def test_bounded_by_one(self):
        """Test M chi <= 1 everywhere and = 1 on the cube."""
        cube = odd_cube((0,), 2)
        assert indicator_maximal_at(cube, (1,)) == 1.0
        assert all(indicator_maximal_at(cube, (k,)) <= 1.0 for k in range(-10, 11))

    def test_far_decay(self):
        """Test M chi(k) <= (3/2)^d N^d / (||k-m|| - N)^d for ||k-m|| > 2N."""
        for d, n in [(1, 1), (1, 3), (2, 2)]:
            cube = odd_cube((0,) * d, n)
            for dist in range(2 * n + 1, 2 * n + 8):
                k = (dist,) + (0,) * (d - 1)
                bound = 1.5 ** d * n ** d / (dist - n) ** d
                assert indicator_maximal_at(cube, k) <= bound

    def test_even_cube_rejected(self):
        """Test that the closed form is limited to odd cubes."""
        with pytest.raises(ParameterDomainError):
            indicator_maximal_at(Cube((0,), 1, Parity.EVEN), (0,))
