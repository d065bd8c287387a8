"""Exact discrete Morrey norms with a certified finite candidate set."""
import logging
from typing import Optional, Tuple

import numpy as np

from morrey_lab.schemas import MorreyParams, NormCertificate, WindowedNorm
from morrey_lab.services.lattice import (
    BoundingBox, Cube, FiniteSequence, Parity, PrefixSumTable,
    cube_cardinality, guard_cells, support_hull
)

logger = logging.getLogger(__name__)


def _scale_exponent(params: MorreyParams) -> float:
    return 1.0 / params.q - 1.0 / params.p


def _prefactor(radius: int, d: int, exponent: float) -> float:
    """|S_{m,N}|^{exponent}; the Morrey norm uses exponent 1/q - 1/p."""
    return float(2 * radius + 1) ** (d * exponent)


def _cube_slice_sum(field: np.ndarray, box: BoundingBox, cube: Cube) -> float:
    overlap = cube.to_box().intersect(box)
    if overlap.is_empty:
        return 0.0
    index = tuple(slice(l - b, h - b + 1) for l, h, b in zip(overlap.lo, overlap.hi, box.lo))
    return float(field[index].sum())


def morrey_candidate(x: FiniteSequence, params: MorreyParams, cube: Cube) -> float:
    """(2N+1)^{d(1/q-1/p)} (sum over S_{m,N} of |x|^p)^{1/p}, by direct summation."""
    if cube.parity != Parity.ODD:
        raise ValueError("Morrey candidates are taken over odd cubes")
    inner = _cube_slice_sum(np.abs(x.values) ** params.p, x.box, cube)
    return _prefactor(cube.radius, x.dim, _scale_exponent(params)) * inner ** (1.0 / params.p)


def _best_candidate(
    table: PrefixSumTable,
    p: float,
    exponent: float,
    radii_and_centers
) -> Tuple[float, Tuple[int, ...], int, int]:
    """
    Max candidate over (N, centers) pairs, visited in lexicographic (N, m)
    order; only strict improvements replace the incumbent.
    """
    best_value = -1.0
    best_center: Tuple[int, ...] = (0,) * table.dim
    best_radius = 0
    count = 0
    for radius, centers in radii_and_centers:
        if len(centers) == 0:
            continue
        sums = table.cube_sums(centers, radius, Parity.ODD)
        values = _prefactor(radius, table.dim, exponent) * sums ** (1.0 / p)
        j = int(np.argmax(values))
        if values[j] > best_value:
            best_value = float(values[j])
            best_center = tuple(int(c) for c in centers[j])
            best_radius = radius
        count += len(centers)
    return max(best_value, 0.0), best_center, best_radius, count


def truncation_radius(hull: BoundingBox) -> int:
    """N0 = ceil((max side - 1)/2): smallest radius of an odd cube covering the hull."""
    if hull.is_empty:
        return 0
    return hull.max_side // 2


def morrey_norm(
    x: FiniteSequence,
    params: MorreyParams,
    cell_limit: Optional[int] = None
) -> NormCertificate:
    """
    Exact ||x||_{l^p_q} over all m in Z^d and N >= 0.

    For N > N0 a cube holds at most all of the mass and its prefactor is
    smaller, so the covering cube of radius N0 dominates; cubes missing the
    hull contribute 0. Hence N <= N0 and m in hull +- N0 is exhaustive.
    """
    hull = support_hull(x)
    d = x.dim
    if hull.is_empty:
        return NormCertificate(
            value=0.0, argmax_center=[0] * d, argmax_radius=0,
            candidate_count=0, truncation_radius=0
        )

    n0 = truncation_radius(hull)
    table = PrefixSumTable.build(np.abs(x.dense_over(hull)) ** params.p, hull)
    center_box = hull.inflate(n0)
    guard_cells(center_box, cell_limit)
    centers = center_box.grid()

    value, center, radius, count = _best_candidate(
        table, params.p, _scale_exponent(params), ((n, centers) for n in range(n0 + 1))
    )
    logger.debug(f"Morrey norm p={params.p} q={params.q}: {value} at S_{center},{radius}")
    return NormCertificate(
        value=value,
        argmax_center=list(center),
        argmax_radius=radius,
        candidate_count=count,
        truncation_radius=n0
    )


def morrey_norm_in_box(
    field: FiniteSequence,
    params: MorreyParams,
    box: BoundingBox,
    cell_limit: Optional[int] = None
) -> WindowedNorm:
    """Sup of the Morrey candidate of `field` over odd cubes contained in `box`."""
    window = WindowedNorm(value=0.0, window_lo=list(box.lo), window_hi=list(box.hi))
    if box.is_empty:
        return window
    guard_cells(box, cell_limit)
    table = PrefixSumTable.build(np.abs(field.dense_over(box, cell_limit)) ** params.p, box)
    max_radius = (min(box.shape) - 1) // 2

    def shrunk_centers():
        for radius in range(max_radius + 1):
            yield radius, box.inflate(-radius).grid()

    value, center, radius, _ = _best_candidate(
        table, params.p, _scale_exponent(params), shrunk_centers()
    )
    window.value = value
    window.argmax_center = list(center)
    window.argmax_radius = radius
    return window


def lp_norm(x: FiniteSequence, p: float) -> float:
    """(sum |x(k)|^p)^{1/p}."""
    if p < 1:
        raise ValueError(f"lp_norm requires p >= 1, got {p}")
    return float((np.abs(x.values) ** p).sum() ** (1.0 / p))


def sup_norm(x: FiniteSequence) -> float:
    """max |x(k)|; 0 for the zero sequence."""
    if x.values.size == 0:
        return 0.0
    return float(np.abs(x.values).max())


def power_mean_check(x: FiniteSequence, cube: Cube, p: float) -> Tuple[float, float]:
    """(|S|^{-1} sum |x|, (|S|^{-1} sum |x|^p)^{1/p}); the first never exceeds the second."""
    if p < 1:
        raise ValueError(f"power_mean_check requires p >= 1, got {p}")
    size = float(cube_cardinality(cube))
    lhs = _cube_slice_sum(np.abs(x.values), x.box, cube) / size
    rhs = (_cube_slice_sum(np.abs(x.values) ** p, x.box, cube) / size) ** (1.0 / p)
    return lhs, rhs


def growth_bound_check(
    x: FiniteSequence,
    params: MorreyParams,
    cube: Cube,
    norm: Optional[float] = None
) -> Tuple[float, float]:
    """(sum over S_{t,n} of |x|^p, ||x||^p (2n+1)^{d - dp/q})."""
    if norm is None:
        norm = morrey_norm(x, params).value
    lhs = _cube_slice_sum(np.abs(x.values) ** params.p, x.box, cube)
    exponent = x.dim - x.dim * params.p / params.q
    rhs = norm ** params.p * float(2 * cube.radius + 1) ** exponent
    return lhs, rhs


def power_mean_sup(x: FiniteSequence, p: float) -> float:
    """
    sup over m, N of (2N+1)^{-d/p} (sum over S_{m,N} of |x|^p)^{1/p}.

    The exponent -1/p is the q -> inf end of the Morrey prefactor, so the
    same N0 truncation is exact.
    """
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    n0 = truncation_radius(hull)
    table = PrefixSumTable.build(np.abs(x.dense_over(hull)) ** p, hull)
    centers = hull.inflate(n0).grid()
    value, _, _, _ = _best_candidate(
        table, p, -1.0 / p, ((n, centers) for n in range(n0 + 1))
    )
    return value
