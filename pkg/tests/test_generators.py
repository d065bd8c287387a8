"""Tests for sequence generators and seed derivation."""
import numpy as np
import pytest
from pydantic import ValidationError

from morrey_lab.exceptions import MemoryGuardError
from morrey_lab.schemas import GeneratorSpec
from morrey_lab.services.generators import derive_seed, generate
from morrey_lab.services.lattice import BoundingBox, support_hull


class TestGenerate:
    """Test each generator family."""

    def test_default_spike(self):
        """Test that the default spec is delta_0."""
        x = generate(GeneratorSpec())
        assert x.box == BoundingBox((0,), (0,))
        assert x.values.tolist() == [1.0]

    def test_cube_indicator(self):
        """Test chi_{S_{0,1}} in Z^2."""
        x = generate(GeneratorSpec(kind="cube-indicator", dim=2, radius=1))
        assert x.box == BoundingBox((-1, -1), (1, 1))
        assert (x.values == 1.0).all()

    def test_power_decay(self):
        """Test ||k||^{-beta} for 1 <= ||k|| <= R and 0 at the center."""
        x = generate(GeneratorSpec(kind="power-decay-truncated", radius=4, beta=0.5))
        expected = [4 ** -0.5, 3 ** -0.5, 2 ** -0.5, 1.0, 0.0, 1.0, 2 ** -0.5, 3 ** -0.5, 4 ** -0.5]
        assert x.values.tolist() == pytest.approx(expected, rel=1e-15)

    def test_multi_spike_count(self):
        """Test distinct spike positions inside the box."""
        spec = GeneratorSpec(kind="multi-spike", dim=2, radius=3, count=5)
        x = generate(spec, seed=4)
        coords, _ = x.support_points()
        assert len(coords) == 5
        assert BoundingBox((-3, -3), (3, 3)).intersect(support_hull(x)) == support_hull(x)

    def test_multi_spike_count_capped(self):
        """Test that count is capped at the box size."""
        x = generate(GeneratorSpec(kind="multi-spike", radius=2, count=20), seed=1)
        assert len(x.support_points()[0]) == 5

    def test_random_box_density(self):
        """Test values within range and zeros from the density mask."""
        spec = GeneratorSpec(kind="uniform-random-box", dim=1, radius=50,
                             value_low=1.0, value_high=2.0, density=0.5)
        x = generate(spec, seed=8)
        nonzero = x.values[x.values != 0]
        assert 0 < len(nonzero) < x.box.size
        assert ((nonzero >= 1.0) & (nonzero <= 2.0)).all()

    def test_offset_moves_center(self):
        """Test that the random center stays within the offset."""
        spec = GeneratorSpec(kind="spike", dim=2, offset=3)
        for seed in range(10):
            coords, _ = generate(spec, seed=seed).support_points()
            assert np.abs(coords).max() <= 3

    def test_deterministic(self):
        """Test identical output for an identical (spec, seed)."""
        spec = GeneratorSpec(kind="uniform-random-box", dim=2, radius=3,
                             value_low=-1.0, value_high=1.0)
        assert np.array_equal(generate(spec, seed=21).values, generate(spec, seed=21).values)
        assert not np.array_equal(generate(spec, seed=21).values, generate(spec, seed=22).values)

    def test_spec_seed_used(self):
        """Test that GeneratorSpec.seed applies when no seed is passed."""
        spec = GeneratorSpec(kind="uniform-random-box", radius=3, value_low=0.0, value_high=1.0,
                             seed=33)
        assert np.array_equal(generate(spec).values, generate(spec, seed=33).values)

    def test_memory_guard(self):
        """Test that oversized boxes are refused."""
        spec = GeneratorSpec(kind="cube-indicator", dim=2, radius=1000)
        with pytest.raises(MemoryGuardError):
            generate(spec, cell_limit=100)

    def test_invalid_value_range(self):
        """Test that value_low > value_high is rejected."""
        with pytest.raises(ValidationError):
            GeneratorSpec(value_low=2.0, value_high=1.0)


class TestDeriveSeed:
    """Test named seed sub-streams."""

    def test_stable(self):
        """Test that the same stream gives the same seed."""
        assert derive_seed(7, "fs", "x", 3) == derive_seed(7, "fs", "x", 3)

    def test_distinct_streams(self):
        """Test that streams, indices and masters separate."""
        seeds = {
            derive_seed(7, "fs", "x", 3),
            derive_seed(7, "fs", "x", 4),
            derive_seed(7, "fs", "phi", 3),
            derive_seed(8, "fs", "x", 3),
        }
        assert len(seeds) == 4

    def test_fits_uint64(self):
        """Test that seeds are nonnegative 64-bit integers."""
        seed = derive_seed(0, "verify", "sandwich")
        assert 0 <= seed < 2 ** 64
