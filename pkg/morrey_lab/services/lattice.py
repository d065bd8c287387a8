"""Lattice geometry, finitely supported sequences and exact cube sums on Z^d."""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from morrey_lab.config import CELL_LIMIT
from morrey_lab.exceptions import (
    LatticeOverflowError, MemoryGuardError, ParameterDomainError
)

logger = logging.getLogger(__name__)

LatticePoint = Tuple[int, ...]

INT64_MAX = int(np.iinfo(np.int64).max)


def as_point(coords: Sequence[int]) -> LatticePoint:
    """Normalize any integer sequence to a lattice point tuple."""
    return tuple(int(c) for c in coords)


def sup_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Return ||a - b||_inf."""
    if len(a) != len(b):
        raise ValueError(f"Dimension mismatch: {len(a)} vs {len(b)}")
    return max(abs(int(u) - int(v)) for u, v in zip(a, b))


def _checked_count(value: int) -> int:
    if value > INT64_MAX:
        raise LatticeOverflowError(f"Lattice count {value} exceeds the int64 range")
    return value


class Parity(str, Enum):
    """Odd cubes S_{m,N} (side 2N+1) and even cubes R_{m,N} (side 2N)."""
    ODD = "odd"
    EVEN = "even"


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive lattice box [lo, hi]; any axis with hi < lo makes it empty."""
    lo: LatticePoint
    hi: LatticePoint

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError(f"Invalid box corners {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def empty(cls, d: int) -> "BoundingBox":
        return cls((0,) * d, (-1,) * d)

    @classmethod
    def around(cls, center: Sequence[int], radius: int) -> "BoundingBox":
        """Box of S_{center,radius}."""
        return cls(
            tuple(c - radius for c in center),
            tuple(c + radius for c in center)
        )

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def is_empty(self) -> bool:
        return any(h < l for l, h in zip(self.lo, self.hi))

    @property
    def shape(self) -> Tuple[int, ...]:
        if self.is_empty:
            return (0,) * self.dim
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        """Exact number of lattice points; overflow is an error."""
        count = 1
        for side in self.shape:
            count *= side
        return _checked_count(count)

    @property
    def max_side(self) -> int:
        return max(self.shape)

    def contains(self, point: Sequence[int]) -> bool:
        if self.is_empty:
            return False
        return all(l <= int(k) <= h for k, l, h in zip(point, self.lo, self.hi))

    def inflate(self, margin: int) -> "BoundingBox":
        if self.is_empty:
            return self
        return BoundingBox(
            tuple(l - margin for l in self.lo),
            tuple(h + margin for h in self.hi)
        )

    def intersect(self, other: "BoundingBox") -> "BoundingBox":
        if self.is_empty or other.is_empty:
            return BoundingBox.empty(self.dim)
        box = BoundingBox(
            tuple(max(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        )
        return BoundingBox.empty(self.dim) if box.is_empty else box

    def union(self, other: "BoundingBox") -> "BoundingBox":
        """Smallest box containing both."""
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return BoundingBox(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi))
        )

    def points(self) -> Iterator[LatticePoint]:
        """Iterate over the box in row-major order."""
        if self.is_empty:
            return iter(())
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def grid(self) -> np.ndarray:
        """All points as an (n, d) int64 array in row-major order."""
        if self.is_empty:
            return np.zeros((0, self.dim), dtype=np.int64)
        idx = np.indices(self.shape, dtype=np.int64).reshape(self.dim, -1).T
        return idx + np.asarray(self.lo, dtype=np.int64)

    def clamp(self, point: Sequence[int]) -> LatticePoint:
        """Coordinate-wise projection of a point onto the box."""
        return tuple(min(max(int(k), l), h) for k, l, h in zip(point, self.lo, self.hi))

    def distance(self, point: Sequence[int]) -> int:
        """||point - box||_inf, zero inside the box."""
        return max(
            max(l - int(k), int(k) - h, 0)
            for k, l, h in zip(point, self.lo, self.hi)
        )

    def farthest_distance(self, point: Sequence[int]) -> int:
        """max over the box of ||k - point||_inf."""
        return max(
            max(h - int(k), int(k) - l)
            for k, l, h in zip(point, self.lo, self.hi)
        )


def guard_cells(box: BoundingBox, cell_limit: Optional[int] = None) -> int:
    """Return the box size, raising MemoryGuardError above the cell limit."""
    limit = CELL_LIMIT if cell_limit is None else cell_limit
    size = box.size
    if size > limit:
        raise MemoryGuardError(
            f"Box {box.lo}..{box.hi} has {size} cells, limit is {limit}"
        )
    return size


@dataclass(frozen=True)
class Cube:
    """Odd cube S_{m,N} or even cube R_{m,N} (upper face removed on every axis)."""
    center: LatticePoint
    radius: int
    parity: Parity = Parity.ODD

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "parity", Parity(self.parity))
        if self.radius < 0:
            raise ParameterDomainError(f"Cube radius must be >= 0, got {self.radius}")
        if self.parity == Parity.EVEN and self.radius < 1:
            raise ParameterDomainError("Even cubes R_{m,N} require N >= 1")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def side(self) -> int:
        return 2 * self.radius + (1 if self.parity == Parity.ODD else 0)

    def to_box(self) -> BoundingBox:
        upper = self.radius if self.parity == Parity.ODD else self.radius - 1
        return BoundingBox(
            tuple(c - self.radius for c in self.center),
            tuple(c + upper for c in self.center)
        )

    def contains(self, point: Sequence[int]) -> bool:
        return self.to_box().contains(point)


def odd_cube(center: Sequence[int], radius: int) -> Cube:
    return Cube(as_point(center), radius, Parity.ODD)


def even_cube(center: Sequence[int], radius: int) -> Cube:
    return Cube(as_point(center), radius, Parity.EVEN)


def cube_cardinality(cube: Cube, d: Optional[int] = None) -> int:
    """|S_{m,N}| = (2N+1)^d, |R_{m,N}| = (2N)^d, in exact integers."""
    d = cube.dim if d is None else d
    if d < 1:
        raise ParameterDomainError(f"Dimension must be >= 1, got {d}")
    return _checked_count(cube.side ** d)


def cube_intersection_cardinality(c1: Cube, c2: Cube, d: Optional[int] = None) -> int:
    """|c1 ∩ c2| for two odd cubes: product of per-axis overlaps, clamped at 0."""
    if c1.parity != Parity.ODD or c2.parity != Parity.ODD:
        raise ParameterDomainError("Intersection cardinality is defined for odd cubes")
    if c1.dim != c2.dim or (d is not None and d != c1.dim):
        raise ValueError(f"Dimension mismatch: {c1.dim} vs {c2.dim}")
    count = 1
    for a, b in zip(c1.center, c2.center):
        lo = max(a - c1.radius, b - c2.radius)
        hi = min(a + c1.radius, b + c2.radius)
        count *= max(0, hi - lo + 1)
    return _checked_count(count)


@dataclass(frozen=True, eq=False)
class FiniteSequence:
    """Finitely supported real sequence: dense row-major values over a box, zero outside."""
    box: BoundingBox
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.box.shape:
            raise ValueError(
                f"Values shape {values.shape} does not match box shape {self.box.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Sequence values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    # --- Constructors ---

    @classmethod
    def zeros(cls, d: int) -> "FiniteSequence":
        box = BoundingBox.empty(d)
        return cls(box, np.zeros(box.shape))

    @classmethod
    def from_points(
        cls,
        points: Dict[Tuple[int, ...], float],
        d: Optional[int] = None,
        cell_limit: Optional[int] = None
    ) -> "FiniteSequence":
        """Densify a point -> value map over the hull of its keys."""
        if not points:
            if d is None:
                raise ValueError("Dimension is required for an empty point map")
            return cls.zeros(d)
        keys = [as_point(k) for k in points]
        dim = len(keys[0])
        if d is not None and d != dim or any(len(k) != dim for k in keys):
            raise ValueError("All points must share one dimension")
        try:
            coords = np.asarray(keys, dtype=np.int64)
        except OverflowError:
            raise LatticeOverflowError("Point coordinates exceed the int64 range")
        box = BoundingBox(tuple(coords.min(axis=0)), tuple(coords.max(axis=0)))
        guard_cells(box, cell_limit)
        values = np.zeros(box.shape)
        offsets = coords - np.asarray(box.lo, dtype=np.int64)
        values[tuple(offsets.T)] = np.asarray(list(points.values()), dtype=np.float64)
        return cls(box, values)

    @classmethod
    def spike(cls, point: Sequence[int], value: float = 1.0) -> "FiniteSequence":
        point = as_point(point)
        return cls(BoundingBox(point, point), np.full((1,) * len(point), float(value)))

    @classmethod
    def indicator(cls, region, value: float = 1.0) -> "FiniteSequence":
        """value times the indicator of a Cube or BoundingBox."""
        box = region.to_box() if isinstance(region, Cube) else region
        guard_cells(box)
        return cls(box, np.full(box.shape, float(value)))

    # --- Accessors ---

    @property
    def dim(self) -> int:
        return self.box.dim

    def value_at(self, point: Sequence[int]) -> float:
        if not self.box.contains(point):
            return 0.0
        offset = tuple(int(k) - l for k, l in zip(point, self.box.lo))
        return float(self.values[offset])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def is_positive(self) -> bool:
        """True when x(k) >= 0 everywhere."""
        return bool(np.all(self.values >= 0))

    def total_abs(self) -> float:
        return float(np.abs(self.values).sum())

    def support_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nonzero points (n, d) and their values, in row-major order."""
        idx = np.argwhere(self.values != 0)
        coords = idx.astype(np.int64) + np.asarray(self.box.lo, dtype=np.int64)
        return coords, self.values[tuple(idx.T)] if len(idx) else np.zeros(0)

    def dense_over(self, box: BoundingBox, cell_limit: Optional[int] = None) -> np.ndarray:
        """Values over another box, zeros where this sequence has no storage."""
        guard_cells(box, cell_limit)
        out = np.zeros(box.shape)
        overlap = self.box.intersect(box)
        if overlap.is_empty:
            return out
        dst = tuple(slice(l - b, h - b + 1) for l, h, b in zip(overlap.lo, overlap.hi, box.lo))
        src = tuple(
            slice(l - b, h - b + 1) for l, h, b in zip(overlap.lo, overlap.hi, self.box.lo)
        )
        out[dst] = self.values[src]
        return out

    # --- Transformations ---

    def abs(self) -> "FiniteSequence":
        return FiniteSequence(self.box, np.abs(self.values))

    def scaled(self, factor: float) -> "FiniteSequence":
        return FiniteSequence(self.box, self.values * float(factor))

    def shifted(self, vector: Sequence[int]) -> "FiniteSequence":
        if self.box.is_empty:
            return self
        return FiniteSequence(
            BoundingBox(
                tuple(l + int(v) for l, v in zip(self.box.lo, vector)),
                tuple(h + int(v) for h, v in zip(self.box.hi, vector))
            ),
            self.values
        )

    def __add__(self, other: "FiniteSequence") -> "FiniteSequence":
        if self.dim != other.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other.dim}")
        box = self.box.union(other.box)
        return FiniteSequence(box, self.dense_over(box) + other.dense_over(box))


def support_hull(x: FiniteSequence) -> BoundingBox:
    """Tight bounding box of {k : x(k) != 0}; the empty box for the zero sequence."""
    idx = np.argwhere(x.values != 0)
    if len(idx) == 0:
        return BoundingBox.empty(x.dim)
    lo = idx.min(axis=0) + np.asarray(x.box.lo)
    hi = idx.max(axis=0) + np.asarray(x.box.lo)
    return BoundingBox(tuple(lo), tuple(hi))


# --- Compensated prefix sums ---

def _two_sum(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Error-free transformation: a + b = s + err exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _compensated_cumsum(hi: np.ndarray, lo: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    h = np.moveaxis(hi, axis, 0)
    l = np.moveaxis(lo, axis, 0)
    out_h = np.empty_like(h)
    out_l = np.empty_like(l)
    running = np.zeros(h.shape[1:])
    comp = np.zeros(h.shape[1:])
    for i in range(h.shape[0]):
        running, err = _two_sum(running, h[i])
        comp = comp + (err + l[i])
        out_h[i] = running
        out_l[i] = comp
    return np.moveaxis(out_h, 0, axis), np.moveaxis(out_l, 0, axis)


@dataclass(frozen=True, eq=False)
class PrefixSumTable:
    """
    d-dimensional summed-area table of a nonnegative field over a box.

    Entry P[i] holds the sum over [box.lo, box.lo + i) as an unevaluated
    pair hi + lo, so that 2^d-corner inclusion-exclusion does not lose the
    small cube sums to cancellation against the table total.
    """
    box: BoundingBox
    hi: np.ndarray
    lo: np.ndarray

    @classmethod
    def build(cls, field: np.ndarray, box: BoundingBox) -> "PrefixSumTable":
        field = np.asarray(field, dtype=np.float64)
        if field.shape != box.shape:
            raise ValueError(f"Field shape {field.shape} does not match box {box.shape}")
        if np.any(field < 0):
            raise ValueError("Prefix tables are built from nonnegative fields")
        d = box.dim
        hi = np.zeros(tuple(s + 1 for s in field.shape))
        hi[(slice(1, None),) * d] = field
        lo = np.zeros_like(hi)
        for axis in range(d):
            hi, lo = _compensated_cumsum(hi, lo, axis)
        hi.setflags(write=False)
        lo.setflags(write=False)
        return cls(box, hi, lo)

    @classmethod
    def of_sequence(cls, x: FiniteSequence, power: float = 1.0) -> "PrefixSumTable":
        """Table of |x|^power over the storage box of x."""
        field = np.abs(x.values)
        if power != 1.0:
            field = field ** power
        return cls.build(field, x.box)

    @property
    def dim(self) -> int:
        return self.box.dim

    def box_sums(self, lo_pts: np.ndarray, hi_pts: np.ndarray) -> np.ndarray:
        """Sums of the field over boxes [lo_pts[j], hi_pts[j]] (rows), zero outside the table."""
        lo_pts = np.atleast_2d(np.asarray(lo_pts, dtype=np.int64))
        hi_pts = np.atleast_2d(np.asarray(hi_pts, dtype=np.int64))
        n = lo_pts.shape[0]
        if n == 0 or self.box.is_empty:
            return np.zeros(n)
        base = np.asarray(self.box.lo, dtype=np.int64)
        a = np.maximum(lo_pts, base) - base
        b = np.minimum(hi_pts, np.asarray(self.box.hi, dtype=np.int64)) - base + 1
        empty = np.any(a >= b, axis=1)
        a[empty] = 0
        b[empty] = 0

        d = self.dim
        total = np.zeros(n)
        comp = np.zeros(n)
        for bits in itertools.product((0, 1), repeat=d):
            index = tuple(b[:, i] if bit else a[:, i] for i, bit in enumerate(bits))
            sign = 1.0 if (d - sum(bits)) % 2 == 0 else -1.0
            total, err = _two_sum(total, sign * self.hi[index])
            comp = comp + (err + sign * self.lo[index])
        result = total + comp
        result[empty] = 0.0
        return np.maximum(result, 0.0)

    def cube_sums(self, centers: np.ndarray, radius: int, parity: Parity = Parity.ODD) -> np.ndarray:
        """Sums over the cubes of one radius at many centers (rows of `centers`)."""
        centers = np.atleast_2d(np.asarray(centers, dtype=np.int64))
        upper = radius if parity == Parity.ODD else radius - 1
        return self.box_sums(centers - radius, centers + upper)


def cube_sum(table: PrefixSumTable, cube: Cube) -> float:
    """Exact sum of the table's field over cube ∩ table.box."""
    box = cube.to_box()
    return float(table.box_sums(np.asarray([box.lo]), np.asarray([box.hi]))[0])


def indicator_maximal_at(cube: Cube, k: Sequence[int]) -> float:
    """
    M(chi_{S_{m,N}})(k) in closed form.

    Radii t < ||k-m|| - N miss the cube; for t >= ||k-m|| + N the
    intersection is the whole cube and the average only decays.
    """
    if cube.parity != Parity.ODD:
        raise ParameterDomainError("Closed form applies to odd cubes")
    dist = sup_distance(k, cube.center)
    d = cube.dim
    best = 0.0
    for t in range(max(0, dist - cube.radius), dist + cube.radius + 1):
        overlap = cube_intersection_cardinality(odd_cube(k, t), cube)
        best = max(best, overlap / cube_cardinality(odd_cube(k, t), d))
    return best
