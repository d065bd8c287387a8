"""Brute-force reference evaluations shared by verify-all and the tests."""
import logging
from typing import Sequence

import numpy as np

from morrey_lab.schemas import MaximalVariant, MorreyParams
from morrey_lab.services.lattice import (
    BoundingBox, Cube, FiniteSequence, Parity, as_point, support_hull
)

logger = logging.getLogger(__name__)


def direct_box_sum(field: np.ndarray, box: BoundingBox, region: BoundingBox) -> float:
    """Sum of a dense field over region ∩ box by slicing."""
    overlap = region.intersect(box)
    if overlap.is_empty:
        return 0.0
    index = tuple(slice(l - b, h - b + 1) for l, h, b in zip(overlap.lo, overlap.hi, box.lo))
    return float(field[index].sum())


def brute_intersection_cardinality(c1: Cube, c2: Cube) -> int:
    return sum(1 for point in c1.to_box().points() if c2.contains(point))


def brute_maximal_at(
    x: FiniteSequence,
    m: Sequence[int],
    variant: MaximalVariant = MaximalVariant.ODD,
    extra: int = 5
) -> float:
    """Maximal value from every admissible cube with N up to the certificate + extra."""
    variant = MaximalVariant(variant)
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    point = as_point(m)
    field = np.abs(x.dense_over(hull))
    d = x.dim
    farthest = hull.farthest_distance(point)
    best = 0.0

    if variant == MaximalVariant.ODD:
        for n in range(farthest + extra + 1):
            region = Cube(point, n).to_box()
            best = max(best, direct_box_sum(field, hull, region) / float(2 * n + 1) ** d)
    elif variant == MaximalVariant.EVEN:
        for n in range(1, farthest + extra + 2):
            region = Cube(point, n, Parity.EVEN).to_box()
            best = max(best, direct_box_sum(field, hull, region) / float(2 * n) ** d)
    else:
        covering = hull.union(BoundingBox(point, point)).max_side // 2
        for n in range(covering + extra + 1):
            for center in BoundingBox.around(point, n).points():
                region = Cube(center, n).to_box()
                best = max(best, direct_box_sum(field, hull, region) / float(2 * n + 1) ** d)
    return best


def brute_morrey_norm(x: FiniteSequence, params: MorreyParams, factor: int = 3) -> float:
    """Morrey norm over N <= factor*N0 and m in hull +- factor*N0."""
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    reach = factor * (hull.max_side // 2)
    field = np.abs(x.dense_over(hull)) ** params.p
    d = x.dim
    exponent = d * (1.0 / params.q - 1.0 / params.p)
    best = 0.0
    for n in range(reach + 1):
        prefactor = float(2 * n + 1) ** exponent
        for center in hull.inflate(reach).points():
            inner = direct_box_sum(field, hull, Cube(center, n).to_box())
            best = max(best, prefactor * inner ** (1.0 / params.p))
    return best


def brute_sup_maximal(x: FiniteSequence, extra: int = 5) -> float:
    """max of brute-force Mx over hull +- (diameter + extra)."""
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    window = hull.inflate(hull.max_side + extra)
    return max(brute_maximal_at(x, point, MaximalVariant.ODD, extra=0) for point in window.points())
