"""Exact odd, even and uncentered discrete Hardy-Littlewood maximal operators."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from morrey_lab.config import DEFAULT_THREADS, MAXIMAL_STABILIZATION_RTOL
from morrey_lab.exceptions import ParameterDomainError, UndefinedRatioError
from morrey_lab.schemas import (
    EquivalenceReport, EquivalenceRow, MaximalVariant, MorreyParams, WindowedNorm
)
from morrey_lab.services.lattice import (
    BoundingBox, FiniteSequence, Parity, PrefixSumTable, as_point, guard_cells, support_hull
)
from morrey_lab.services.morrey_norm import (
    morrey_norm, morrey_norm_in_box, power_mean_sup
)

logger = logging.getLogger(__name__)

# Slack for comparisons whose sides differ only by a rounded constant factor
ULP_SLACK = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class MaximalField:
    """Exact values of one maximal operator at every point of a window."""
    variant: MaximalVariant
    window: BoundingBox
    values: np.ndarray
    source_hull: BoundingBox
    total_abs: float

    def as_sequence(self) -> FiniteSequence:
        return FiniteSequence(self.window, self.values)

    def value_at(self, point: Sequence[int]) -> float:
        offset = tuple(int(k) - l for k, l in zip(point, self.window.lo))
        return float(self.values[offset])


def _farthest(hull: BoundingBox, points: np.ndarray) -> np.ndarray:
    """N*(m) = max over supp of ||k - m||_inf, exact from the tight hull."""
    lo = np.asarray(hull.lo, dtype=np.int64)
    hi = np.asarray(hull.hi, dtype=np.int64)
    return np.maximum(hi - points, points - lo).max(axis=1)


def _covering_radius(hull: BoundingBox, points: np.ndarray) -> np.ndarray:
    """N_c(m): smallest radius of an odd cube containing m and the whole hull."""
    lo = np.minimum(points, np.asarray(hull.lo, dtype=np.int64))
    hi = np.maximum(points, np.asarray(hull.hi, dtype=np.int64))
    return (hi - lo + 1).max(axis=1) // 2


def _centered_values(
    table: PrefixSumTable,
    hull: BoundingBox,
    window: BoundingBox,
    parity: Parity
) -> np.ndarray:
    """
    Centered sup at each window point over radii up to its certificate.

    Odd: past N*(m) the cube holds all of supp and the average decreases.
    Even: R_{m,N} holds all of supp from N*(m)+1 on.
    """
    points = window.grid()
    bound = _farthest(hull, points) + (1 if parity == Parity.EVEN else 0)
    first = 0 if parity == Parity.ODD else 1
    best = np.zeros(len(points))
    d = window.dim
    for radius in range(first, int(bound.max()) + 1):
        active = bound >= radius
        side = 2 * radius + (1 if parity == Parity.ODD else 0)
        averages = table.cube_sums(points[active], radius, parity) / float(side) ** d
        best[active] = np.maximum(best[active], averages)
    return best.reshape(window.shape)


def _uncentered_values(table: PrefixSumTable, hull: BoundingBox, window: BoundingBox) -> np.ndarray:
    """
    sup over odd cubes S_{k,N} containing m, N <= N_c(m).

    Per radius, the cube-sum field on window +- N is reduced by a separable
    sliding maximum of width 2N+1, which is the max over centers k with
    ||k - m||_inf <= N.
    """
    points = window.grid()
    bound = _covering_radius(hull, points).reshape(window.shape)
    best = np.zeros(window.shape)
    d = window.dim
    for radius in range(int(bound.max()) + 1):
        region = window.inflate(radius)
        guard_cells(region)
        sums = table.cube_sums(region.grid(), radius, Parity.ODD).reshape(region.shape)
        for axis in range(d):
            sums = sliding_window_view(sums, 2 * radius + 1, axis=axis).max(axis=-1)
        averages = sums / float(2 * radius + 1) ** d
        active = bound >= radius
        best[active] = np.maximum(best[active], averages[active])
    return best


def _evaluate(
    table: PrefixSumTable,
    hull: BoundingBox,
    window: BoundingBox,
    variant: MaximalVariant
) -> np.ndarray:
    if hull.is_empty or window.is_empty:
        return np.zeros(window.shape)
    if variant == MaximalVariant.ODD:
        return _centered_values(table, hull, window, Parity.ODD)
    if variant == MaximalVariant.EVEN:
        return _centered_values(table, hull, window, Parity.EVEN)
    return _uncentered_values(table, hull, window)


def _split_rows(window: BoundingBox, parts: int) -> List[BoundingBox]:
    """Split a window along its first axis into at most `parts` slabs."""
    rows = window.shape[0]
    parts = max(1, min(parts, rows))
    edges = np.linspace(0, rows, parts + 1).astype(int)
    slabs = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            slabs.append(BoundingBox(
                (window.lo[0] + int(a),) + window.lo[1:],
                (window.lo[0] + int(b) - 1,) + window.hi[1:]
            ))
    return slabs


def _source_table(x: FiniteSequence) -> Tuple[BoundingBox, PrefixSumTable]:
    hull = support_hull(x)
    return hull, PrefixSumTable.build(np.abs(x.dense_over(hull)), hull)


def maximal_field(
    x: FiniteSequence,
    window: BoundingBox,
    variant: MaximalVariant = MaximalVariant.ODD,
    threads: Optional[int] = None,
    cell_limit: Optional[int] = None
) -> MaximalField:
    """Exact maximal function on every window point; slabs may run in parallel."""
    variant = MaximalVariant(variant)
    if window.is_empty:
        raise ValueError("maximal_field requires a nonempty window")
    guard_cells(window, cell_limit)
    hull, table = _source_table(x)
    threads = DEFAULT_THREADS if threads is None else threads

    slabs = _split_rows(window, threads)
    if len(slabs) == 1:
        parts = [_evaluate(table, hull, window, variant)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda slab: _evaluate(table, hull, slab, variant), slabs))
    values = np.concatenate(parts, axis=0)

    return MaximalField(
        variant=variant,
        window=window,
        values=values,
        source_hull=hull,
        total_abs=x.total_abs()
    )


def maximal_at(
    x: FiniteSequence,
    m: Sequence[int],
    variant: MaximalVariant = MaximalVariant.ODD
) -> float:
    """Exact value of the chosen maximal operator at a single point."""
    point = as_point(m)
    hull, table = _source_table(x)
    window = BoundingBox(point, point)
    return float(_evaluate(table, hull, window, MaximalVariant(variant)).reshape(-1)[0])


def certified_sup_maximal(
    x: FiniteSequence,
    variant: MaximalVariant = MaximalVariant.ODD
) -> float:
    """
    sup over Z^d of Mx.

    Clamping m onto the hull does not increase ||k - m||_inf for any k in
    supp, so every average at m is matched at the clamp and the sup is
    attained on the hull.
    """
    if MaximalVariant(variant) != MaximalVariant.ODD:
        raise ParameterDomainError("The certified global sup is defined for the odd operator")
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    return float(maximal_field(x, hull, MaximalVariant.ODD).values.max())


def maximal_tail_bound(x: FiniteSequence, m: Sequence[int]) -> float:
    """sum|x| / (2 dist_inf(m, hull) + 1)^d, an upper bound for Mx(m)."""
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0
    dist = hull.distance(m)
    return x.total_abs() / float(2 * dist + 1) ** x.dim


def _relative_drift(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(b - a) / scale


def windowed_morrey_norm_of_maximal(
    x: FiniteSequence,
    params: MorreyParams,
    margin: int,
    rtol: float = MAXIMAL_STABILIZATION_RTOL,
    threads: Optional[int] = None
) -> WindowedNorm:
    """
    Morrey norm of Mx over cubes inside hull +- L: a lower bound of ||Mx||.

    `stabilized` is set when the value at margin 2L differs by less than
    `rtol` (relative). `outside_bound` bounds Mx beyond the window.
    """
    if margin < 0:
        raise ValueError(f"Margin must be >= 0, got {margin}")
    hull = support_hull(x)
    if hull.is_empty:
        return WindowedNorm(value=0.0, margin=margin, doubled_value=0.0, drift=0.0,
                            stabilized=True, outside_bound=0.0)

    results = []
    for width in (margin, 2 * margin):
        window = hull.inflate(width)
        field = maximal_field(x, window, MaximalVariant.ODD, threads=threads)
        results.append(morrey_norm_in_box(field.as_sequence(), params, window))

    windowed, doubled = results
    windowed.margin = margin
    windowed.doubled_value = doubled.value
    windowed.drift = _relative_drift(windowed.value, doubled.value)
    windowed.stabilized = bool(windowed.drift < rtol)
    windowed.outside_bound = x.total_abs() / float(2 * (margin + 1) + 1) ** x.dim
    if not windowed.stabilized:
        logger.warning(
            f"Windowed norm of Mx not stabilized at L={margin}: drift {windowed.drift:.3e}"
        )
    return windowed


def boundedness_ratio(
    x: FiniteSequence,
    params: MorreyParams,
    margin: int,
    windowed: Optional[WindowedNorm] = None
) -> float:
    """Windowed ||Mx||_{l^p_q} / ||x||_{l^p_q}: an empirical lower estimate of C."""
    if params.p <= 1:
        raise ParameterDomainError(
            f"Maximal operator bound on l^p_q requires 1 < p <= q, got p={params.p}"
        )
    norm = morrey_norm(x, params).value
    if norm == 0:
        raise UndefinedRatioError("Boundedness ratio is undefined for the zero sequence")
    if windowed is None:
        windowed = windowed_morrey_norm_of_maximal(x, params, margin)
    return windowed.value / norm


def theoretical_constant(k: float, d: int, params: MorreyParams) -> float:
    """
    C with C/2 = max(2^{d-dp/q} K, 3^d 2^{d-dp/q} (1/(1 - 2^{-dp/q}) - 1) K).

    Linear in K.
    """
    if k <= 0:
        raise ParameterDomainError(f"K must be > 0, got {k}")
    if params.p <= 1:
        raise ParameterDomainError(
            f"Maximal operator bound on l^p_q requires 1 < p <= q, got p={params.p}"
        )
    e = d * params.p / params.q
    head = 2.0 ** (d - e) * k
    tail = 3.0 ** d * 2.0 ** (d - e) * (1.0 / (1.0 - 2.0 ** (-e)) - 1.0) * k
    return 2.0 * max(head, tail)


def final_bound_constant(k: float, d: int, params: MorreyParams) -> float:
    """max(C^{1/p}, 1): the constant in ||Mx|| <= const * ||x||."""
    return max(theoretical_constant(k, d, params) ** (1.0 / params.p), 1.0)


def equivalence_check(x: FiniteSequence, window: BoundingBox) -> EquivalenceReport:
    """
    Pointwise check of M <= 2^d M-hat, M-hat <= (3/2)^d M, M <= M-tilde <= 2^d M.

    Violations are recorded per point, never raised.
    """
    d = window.dim
    odd = maximal_field(x, window, MaximalVariant.ODD).values.reshape(-1)
    even = maximal_field(x, window, MaximalVariant.EVEN).values.reshape(-1)
    uncentered = maximal_field(x, window, MaximalVariant.UNCENTERED).values.reshape(-1)
    upper = 1.0 + ULP_SLACK

    report = EquivalenceReport()
    for point, m, mhat, mtilde in zip(window.points(), odd, even, uncentered):
        violations = []
        if m > 2.0 ** d * mhat * upper:
            violations.append("M <= 2^d Mhat")
        if mhat > 1.5 ** d * m * upper:
            violations.append("Mhat <= (3/2)^d M")
        if m > mtilde:
            violations.append("M <= Mtilde")
        if mtilde > 2.0 ** d * m * upper:
            violations.append("Mtilde <= 2^d M")
        report.rows.append(EquivalenceRow(
            point=list(point), M=float(m), Mhat=float(mhat), Mtilde=float(mtilde),
            violations=violations
        ))
        report.violation_count += len(violations)
    report.points_checked = len(report.rows)
    if report.violation_count:
        logger.warning(f"Equivalence check found {report.violation_count} violations")
    return report


def sup_bound_chain(x: FiniteSequence, params: MorreyParams) -> Tuple[float, float, float]:
    """(sup Mx, sup of the p-power mean over cubes, ||x||_{l^p_q}); nondecreasing."""
    return (
        certified_sup_maximal(x),
        power_mean_sup(x, params.p),
        morrey_norm(x, params).value
    )
