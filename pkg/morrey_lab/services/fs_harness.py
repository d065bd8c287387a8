"""
Fefferman-Stein harness: exact evaluation of both sides of

    sum_k (Mx(k))^p phi(k)  <=  K sum_k |x(k)|^p Mphi(k)

for the odd, even and uncentered operators, and ensemble estimation of K.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from morrey_lab.config import DEFAULT_SEED, DEFAULT_THREADS
from morrey_lab.exceptions import ParameterDomainError
from morrey_lab.schemas import GeneratorSpec, MaximalVariant, RatioReport, RatioRow
from morrey_lab.services.generators import derive_seed, generate
from morrey_lab.services.lattice import (
    FiniteSequence, odd_cube, support_hull
)
from morrey_lab.services.maximal import maximal_field

logger = logging.getLogger(__name__)

PHI_MODES = ("independent", "same", "cube-weight")

# The (d, p) cells of the full ensemble grid, each run for every variant
GRID_DIMS = (1, 2)
GRID_EXPONENTS = (1.5, 2.0, 3.0)


@dataclass(frozen=True, eq=False)
class FsInstance:
    """One (x, phi, p, variant) input of the weighted inequality."""
    x: FiniteSequence
    phi: FiniteSequence
    p: float
    variant: MaximalVariant = MaximalVariant.ODD

    def __post_init__(self):
        object.__setattr__(self, "variant", MaximalVariant(self.variant))
        if not self.p > 1:
            raise ParameterDomainError(f"Fefferman-Stein inequality requires p > 1, got p={self.p}")
        if not self.phi.is_positive():
            raise ParameterDomainError("Fefferman-Stein weight phi must be nonnegative")
        if self.x.dim != self.phi.dim:
            raise ValueError(f"Dimension mismatch: x has {self.x.dim}, phi has {self.phi.dim}")


def _weighted_power_sum(
    source: FiniteSequence,
    weight: FiniteSequence,
    variant: MaximalVariant,
    p: float,
    maximal_on_source: bool
) -> float:
    """Sum over the hull of `weight` of (maximal source)^p * weight, or its mirror."""
    hull = support_hull(weight)
    if hull.is_empty or support_hull(source).is_empty:
        return 0.0
    field = maximal_field(source, hull, variant).values
    dense = np.abs(weight.dense_over(hull))
    if maximal_on_source:
        return float((field ** p * dense).sum())
    return float((dense ** p * field).sum())


def fs_sides(inst: FsInstance) -> Tuple[float, float]:
    """
    (lhs, rhs) as exact finite sums.

    lhs runs over supp(phi), rhs over supp(x); maximal values are exact.
    """
    lhs = _weighted_power_sum(inst.x, inst.phi, inst.variant, inst.p, maximal_on_source=True)
    rhs = _weighted_power_sum(inst.phi, inst.x, inst.variant, inst.p, maximal_on_source=False)
    return lhs, rhs


def cube_weight_fs_check(
    x: FiniteSequence,
    center,
    radius: int,
    p: float,
    variant: MaximalVariant = MaximalVariant.ODD
) -> Tuple[float, float]:
    """(sum over S_{m,N} of (Mx)^p, sum of |x|^p M chi_{S_{m,N}}): the per-cube step."""
    phi = FiniteSequence.indicator(odd_cube(center, radius))
    return fs_sides(FsInstance(x=x, phi=phi, p=p, variant=variant))


def _draw_weight(
    gen: GeneratorSpec,
    x: FiniteSequence,
    master: int,
    trial: int,
    phi_mode: str
) -> FiniteSequence:
    if phi_mode == "same":
        return x.abs()
    if phi_mode == "independent":
        return generate(gen, seed=derive_seed(master, "fs", "phi", trial)).abs()
    if phi_mode == "cube-weight":
        rng = np.random.default_rng(derive_seed(master, "fs", "cube", trial))
        reach = gen.offset + gen.radius
        center = tuple(int(c) for c in rng.integers(-reach, reach + 1, size=gen.dim))
        radius = int(rng.integers(0, max(gen.radius, 1) + 1))
        return FiniteSequence.indicator(odd_cube(center, radius))
    raise ValueError(f"Unknown phi mode {phi_mode!r}; expected one of {PHI_MODES}")


def _ratio_row(trial: int, seed: int, inst: FsInstance) -> RatioRow:
    lhs, rhs = fs_sides(inst)
    if rhs == 0:
        return RatioRow(trial=trial, seed=seed, lhs=lhs, rhs=rhs, ratio=None, skipped=True)
    return RatioRow(trial=trial, seed=seed, lhs=lhs, rhs=rhs, ratio=lhs / rhs)


def summarize_rows(rows: List[RatioRow], parameters: Dict) -> RatioReport:
    """Fold rows (in trial order) into a report; ties keep the earliest trial."""
    report = RatioReport(trials=len(rows), evaluated=0, skipped=0, max_ratio=0.0,
                         rows=rows, parameters=parameters)
    for row in rows:
        if row.skipped:
            report.skipped += 1
            continue
        report.evaluated += 1
        if report.argmax_trial is None or row.ratio > report.max_ratio:
            report.max_ratio = row.ratio
            report.argmax_trial = row.trial
            report.argmax_seed = row.seed
    if report.skipped:
        logger.warning(f"Skipped {report.skipped} of {report.trials} trials with zero rhs")
    return report


def fs_ratio_ensemble(
    gen: GeneratorSpec,
    trials: int,
    p: float,
    variant: MaximalVariant = MaximalVariant.ODD,
    seed: int = DEFAULT_SEED,
    phi_mode: str = "independent",
    threads: Optional[int] = None
) -> RatioReport:
    """
    lhs/rhs over `trials` generated instances; max_ratio estimates K from below.

    Trial i draws x from sub-stream ("fs", "x", i) and phi per `phi_mode`, so
    the report does not depend on the thread count.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not p > 1:
        raise ParameterDomainError(f"Fefferman-Stein inequality requires p > 1, got p={p}")
    variant = MaximalVariant(variant)
    threads = DEFAULT_THREADS if threads is None else threads

    def run_trial(trial: int) -> RatioRow:
        x_seed = derive_seed(seed, "fs", "x", trial)
        x = generate(gen, seed=x_seed)
        phi = _draw_weight(gen, x, seed, trial, phi_mode)
        return _ratio_row(trial, x_seed, FsInstance(x=x, phi=phi, p=p, variant=variant))

    if threads <= 1:
        rows = [run_trial(i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_trial, range(trials)))

    report = summarize_rows(rows, {
        "p": p, "variant": variant.value, "phi_mode": phi_mode,
        "seed": seed, "generator": gen.model_dump()
    })
    logger.info(
        f"FS ensemble {variant.value} p={p}: max ratio {report.max_ratio:.6g} "
        f"over {report.evaluated} trials"
    )
    return report


def _as_points(x: FiniteSequence) -> Dict[tuple, float]:
    coords, values = x.support_points()
    return {tuple(int(c) for c in point): float(v) for point, v in zip(coords, values)}


def _perturb(points: Dict[tuple, float], rng: np.random.Generator, d: int) -> Dict[tuple, float]:
    """Move one spike by a unit step or rescale its weight by a lognormal factor."""
    moved = dict(points)
    if not moved:
        return moved
    keys = sorted(moved)
    key = keys[int(rng.integers(len(keys)))]
    if rng.random() < 0.5:
        target = list(key)
        target[int(rng.integers(d))] += int(rng.choice([-1, 1]))
        value = moved.pop(key)
        moved[tuple(target)] = moved.get(tuple(target), 0.0) + value
    else:
        moved[key] = moved[key] * float(np.exp(rng.normal(0.0, 0.5)))
    return moved


def fs_adversarial_search(
    gen: GeneratorSpec,
    p: float,
    variant: MaximalVariant = MaximalVariant.ODD,
    steps: int = 100,
    seed: int = DEFAULT_SEED
) -> RatioReport:
    """
    Hill-climb spike positions and weights of (x, phi) to push lhs/rhs up.

    Only strict ratio gains are accepted; row j holds the incumbent after step j.
    """
    variant = MaximalVariant(variant)
    d = gen.dim
    x_seed = derive_seed(seed, "adversarial", "x")
    x_points = _as_points(generate(gen, seed=x_seed))
    phi_points = _as_points(generate(gen, seed=derive_seed(seed, "adversarial", "phi")).abs())
    rng = np.random.default_rng(derive_seed(seed, "adversarial", "moves"))

    def score(xp, pp) -> RatioRow:
        x = FiniteSequence.from_points(xp, d=d)
        phi = FiniteSequence.from_points(pp, d=d)
        return _ratio_row(0, x_seed, FsInstance(x=x, phi=phi, p=p, variant=variant))

    best = score(x_points, phi_points)
    rows = [best]
    for step in range(1, steps + 1):
        if rng.random() < 0.5:
            cand_x, cand_phi = _perturb(x_points, rng, d), phi_points
        else:
            cand_x, cand_phi = x_points, _perturb(phi_points, rng, d)
        candidate = score(cand_x, cand_phi)
        if not candidate.skipped and (best.skipped or candidate.ratio > best.ratio):
            best, x_points, phi_points = candidate, cand_x, cand_phi
        rows.append(best.model_copy(update={"trial": step}))

    report = summarize_rows(rows, {
        "p": p, "variant": variant.value, "steps": steps, "seed": seed,
        "mode": "adversarial", "generator": gen.model_dump()
    })
    logger.info(f"Adversarial search {variant.value} p={p}: ratio {report.max_ratio:.6g}")
    return report


def variant_transfer_holds(x: FiniteSequence, phi: FiniteSequence, p: float) -> bool:
    """lhs_uncentered <= 2^{dp} lhs_odd and rhs_uncentered >= rhs_odd."""
    odd = fs_sides(FsInstance(x=x, phi=phi, p=p, variant=MaximalVariant.ODD))
    unc = fs_sides(FsInstance(x=x, phi=phi, p=p, variant=MaximalVariant.UNCENTERED))
    slack = 1.0 + 1e-12
    return unc[0] <= 2.0 ** (x.dim * p) * odd[0] * slack and unc[1] * slack >= odd[1]
