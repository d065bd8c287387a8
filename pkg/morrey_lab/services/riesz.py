"""
Discrete Riesz potential I_alpha on Z^d and its pointwise/norm bounds.

I_alpha x(k) = sum over i != k of x(i) / ||k - i||_inf^(d - alpha). The sum
runs over supp(x) only, so every value here is an exact finite sum.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple

import numpy as np

from morrey_lab.config import DEFAULT_THREADS, RIESZ_STABILIZATION_RTOL
from morrey_lab.exceptions import ParameterDomainError, UndefinedRatioError
from morrey_lab.schemas import (
    MaximalVariant, MorreyParams, RieszParams, SandwichRow, WindowedNorm
)
from morrey_lab.services.lattice import (
    BoundingBox, FiniteSequence, Parity, PrefixSumTable, as_point, guard_cells, support_hull
)
from morrey_lab.services.maximal import ULP_SLACK, maximal_at, maximal_field
from morrey_lab.services.morrey_norm import morrey_norm, morrey_norm_in_box

logger = logging.getLogger(__name__)

# Distance-matrix cells evaluated per chunk
CHUNK_CELLS = 1 << 22


def conjugate_exponents(rp: RieszParams) -> Tuple[float, float]:
    """s = dp/(d - alpha q), t = qs/p: the target space l^s_t of I_alpha."""
    s = rp.d * rp.p / (rp.d - rp.alpha * rp.q)
    t = rp.q * s / rp.p
    if not (1.0 < s <= t < float("inf")):
        raise ParameterDomainError(f"Conjugate exponents out of range: s={s}, t={t}")
    return s, t


def _kernel_sums(
    points: np.ndarray,
    coords: np.ndarray,
    weights: np.ndarray,
    exponent: float
) -> np.ndarray:
    """sum_j weights[j] / ||point - coords[j]||^exponent over coords[j] != point."""
    out = np.zeros(len(points))
    if len(coords) == 0 or len(points) == 0:
        return out
    step = max(1, CHUNK_CELLS // len(coords))
    for start in range(0, len(points), step):
        block = points[start:start + step]
        dist = np.abs(block[:, None, :] - coords[None, :, :]).max(axis=2)
        kernel = np.zeros(dist.shape)
        far = dist > 0
        kernel[far] = dist[far].astype(np.float64) ** (-exponent)
        out[start:start + step] = (kernel * weights[None, :]).sum(axis=1)
    return out


def riesz_field(
    x: FiniteSequence,
    rp: RieszParams,
    window: BoundingBox,
    threads: Optional[int] = None,
    cell_limit: Optional[int] = None
) -> FiniteSequence:
    """I_alpha x at every window point, returned as a sequence stored over the window."""
    if x.dim != rp.d:
        raise ParameterDomainError(f"Sequence dimension {x.dim} differs from d={rp.d}")
    guard_cells(window, cell_limit)
    if window.is_empty:
        return FiniteSequence(window, np.zeros(window.shape))
    coords, values = x.support_points()
    points = window.grid()
    exponent = rp.d - rp.alpha
    threads = DEFAULT_THREADS if threads is None else threads

    if threads <= 1 or len(points) < 2:
        out = _kernel_sums(points, coords, values, exponent)
    else:
        chunks = np.array_split(points, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _kernel_sums(c, coords, values, exponent), chunks))
        out = np.concatenate(parts)
    return FiniteSequence(window, out.reshape(window.shape))


def riesz_at(x: FiniteSequence, rp: RieszParams, k: Sequence[int]) -> float:
    """Exact I_alpha x(k); signed x is allowed and the i = k term is excluded."""
    if x.dim != rp.d:
        raise ParameterDomainError(f"Sequence dimension {x.dim} differs from d={rp.d}")
    coords, values = x.support_points()
    point = np.asarray([as_point(k)], dtype=np.int64)
    return float(_kernel_sums(point, coords, values, rp.d - rp.alpha)[0])


def hedberg_split(
    x: FiniteSequence,
    rp: RieszParams,
    k: Sequence[int],
    r: float
) -> Tuple[float, float]:
    """
    Near and far parts of the potential of |x| at k.

    i1 sums 0 < ||k-i|| <= r, i2 sums ||k-i|| > r; i1 + i2 >= |I_alpha x(k)|.
    """
    if r < 1:
        raise ParameterDomainError(f"Split radius must be >= 1, got {r}")
    coords, values = x.support_points()
    if len(coords) == 0:
        return 0.0, 0.0
    dist = np.abs(coords - np.asarray(as_point(k), dtype=np.int64)).max(axis=1)
    terms = np.zeros(len(dist))
    nonzero = dist > 0
    terms[nonzero] = np.abs(values[nonzero]) * dist[nonzero].astype(np.float64) ** (rp.alpha - rp.d)
    near = nonzero & (dist <= r)
    return float(terms[near].sum()), float(terms[dist > r].sum())


def hedberg_ratio(
    x: FiniteSequence,
    rp: RieszParams,
    k: Sequence[int],
    r: float,
    norm: Optional[float] = None
) -> float:
    """|I_alpha x(k)| / (r^alpha Mx(k) + r^(alpha - d/q) ||x||_{l^p_q})."""
    if r < 1:
        raise ParameterDomainError(f"Split radius must be >= 1, got {r}")
    if norm is None:
        norm = morrey_norm(x, rp.morrey).value
    mx = maximal_at(x, k, MaximalVariant.ODD)
    denominator = r ** rp.alpha * mx + r ** (rp.alpha - rp.d / rp.q) * norm
    if denominator == 0:
        raise UndefinedRatioError("Hedberg ratio is undefined for the zero sequence")
    return abs(riesz_at(x, rp, k)) / denominator


def optimal_split_radius(
    x: FiniteSequence,
    rp: RieszParams,
    k: Sequence[int],
    norm: Optional[float] = None
) -> Optional[float]:
    """
    r = (||x|| / Mx(k))^(q/d), where both Hedberg terms balance.

    r >= 1 since Mx(k) <= ||x||. None when Mx(k) = 0.
    """
    if norm is None:
        norm = morrey_norm(x, rp.morrey).value
    mx = maximal_at(x, k, MaximalVariant.ODD)
    if mx == 0:
        return None
    return (norm / mx) ** (rp.q / rp.d)


def hedberg_optimized_ratio(
    x: FiniteSequence,
    rp: RieszParams,
    k: Sequence[int],
    norm: Optional[float] = None
) -> float:
    """|I_alpha x(k)| / (Mx(k)^(1 - alpha q/d) ||x||^(alpha q/d)); 0 when Mx(k) = 0."""
    mx = maximal_at(x, k, MaximalVariant.ODD)
    if mx == 0:
        return 0.0
    if norm is None:
        norm = morrey_norm(x, rp.morrey).value
    theta = rp.alpha * rp.q / rp.d
    return abs(riesz_at(x, rp, k)) / (mx ** (1.0 - theta) * norm ** theta)


def _ball_table(x: FiniteSequence) -> Tuple[BoundingBox, PrefixSumTable]:
    hull = support_hull(x)
    return hull, PrefixSumTable.build(np.abs(x.dense_over(hull)), hull)


def ball_average_sup(x: FiniteSequence, m: Sequence[int]) -> float:
    """
    S(m) = sup over real r >= 1 of (2r)^(-d) sum over ||m-k|| <= r of |x(k)|.

    Ball content is constant on [n, n+1) and the prefactor decreases, so the
    sup sits at an integer radius; past N*(m) the content is constant too.
    """
    hull, table = _ball_table(x)
    if hull.is_empty:
        return 0.0
    point = as_point(m)
    top = max(1, hull.farthest_distance(point))
    center = np.asarray([point], dtype=np.int64)
    best = 0.0
    for r in range(1, top + 1):
        total = float(table.cube_sums(center, r, Parity.ODD)[0])
        best = max(best, total / float(2 * r) ** x.dim)
    return best


def ball_average_sup_on_grid(
    x: FiniteSequence,
    m: Sequence[int],
    r_max: float,
    step: float = 0.01
) -> float:
    """The same sup taken over the real grid 1, 1 + step, ..., r_max."""
    hull, table = _ball_table(x)
    if hull.is_empty:
        return 0.0
    center = np.asarray([as_point(m)], dtype=np.int64)
    best = 0.0
    for i in range(int(round((r_max - 1.0) / step)) + 1):
        r = 1.0 + i * step
        total = float(table.cube_sums(center, int(np.floor(r + 1e-9)), Parity.ODD)[0])
        best = max(best, total / (2.0 * r) ** x.dim)
    return best


def sandwich_check(x: FiniteSequence, m: Sequence[int]) -> SandwichRow:
    """((2/3)^d S(m), Mx(m), 2^d S(m)); a violation is flagged, never raised."""
    d = x.dim
    s = ball_average_sup(x, m)
    mid = maximal_at(x, m, MaximalVariant.ODD)
    low = (2.0 / 3.0) ** d * s
    high = 2.0 ** d * s
    upper = 1.0 + ULP_SLACK
    violated = bool(low > mid * upper or mid > high * upper)
    if violated:
        logger.warning(f"Sandwich violated at {as_point(m)}: {low} <= {mid} <= {high}")
    return SandwichRow(point=list(as_point(m)), low=low, mid=mid, high=high, violated=violated)


def _relative_drift(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(b - a) / scale


def windowed_riesz_norm(
    x: FiniteSequence,
    rp: RieszParams,
    margin: int,
    rtol: float = RIESZ_STABILIZATION_RTOL,
    threads: Optional[int] = None
) -> WindowedNorm:
    """
    l^s_t Morrey norm of |I_alpha x| over cubes inside hull +- L (a lower bound).

    Beyond the window |I_alpha x(k)| <= sum|x| (L+1)^(alpha-d), reported as
    `outside_bound`; `stabilized` compares margins L and 2L.
    """
    if margin < 0:
        raise ValueError(f"Margin must be >= 0, got {margin}")
    s, t = conjugate_exponents(rp)
    target = MorreyParams(p=s, q=t)
    hull = support_hull(x)
    if hull.is_empty:
        return WindowedNorm(value=0.0, margin=margin, doubled_value=0.0, drift=0.0,
                            stabilized=True, outside_bound=0.0)

    results = []
    for width in (margin, 2 * margin):
        window = hull.inflate(width)
        field = riesz_field(x, rp, window, threads=threads)
        results.append(morrey_norm_in_box(field.abs(), target, window))

    windowed, doubled = results
    windowed.margin = margin
    windowed.doubled_value = doubled.value
    windowed.drift = _relative_drift(windowed.value, doubled.value)
    windowed.stabilized = bool(windowed.drift < rtol)
    windowed.outside_bound = x.total_abs() * float(margin + 1) ** (rp.alpha - rp.d)
    if not windowed.stabilized:
        logger.warning(
            f"Windowed norm of I_alpha x not stabilized at L={margin}: drift {windowed.drift:.3e}"
        )
    return windowed


def riesz_boundedness_ratio(
    x: FiniteSequence,
    rp: RieszParams,
    margin: int,
    windowed: Optional[WindowedNorm] = None
) -> float:
    """Windowed ||I_alpha x||_{l^s_t} / ||x||_{l^p_q}."""
    norm = morrey_norm(x, rp.morrey).value
    if norm == 0:
        raise UndefinedRatioError("Riesz boundedness ratio is undefined for the zero sequence")
    if windowed is None:
        windowed = windowed_riesz_norm(x, rp, margin)
    return windowed.value / norm


def hedberg_transfer_check(
    x: FiniteSequence,
    rp: RieszParams,
    margin: int
) -> Tuple[float, float]:
    """
    (||(Mx)^(p/s)||_{l^s_t}, ||Mx||_{l^p_q}^(p/s)) over cubes inside hull +- L.

    Cube by cube the two candidates agree since 1/t - 1/s = (p/s)(1/q - 1/p),
    so the window sups agree as well.
    """
    s, t = conjugate_exponents(rp)
    hull = support_hull(x)
    if hull.is_empty:
        return 0.0, 0.0
    window = hull.inflate(margin)
    mx = maximal_field(x, window, MaximalVariant.ODD).as_sequence()
    powered = FiniteSequence(window, mx.values ** (rp.p / s))
    lhs = morrey_norm_in_box(powered, MorreyParams(p=s, q=t), window).value
    rhs = morrey_norm_in_box(mx, rp.morrey, window).value ** (rp.p / s)
    return lhs, rhs
