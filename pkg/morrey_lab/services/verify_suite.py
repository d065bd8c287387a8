"""Property groups run by `verify-all`: every inequality checked on random instances."""
import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from morrey_lab.schemas import (
    GeneratorSpec, MaximalVariant, MorreyParams, PropertyResult, RieszParams, VerifySection
)
from morrey_lab.services.fs_harness import (
    GRID_DIMS, GRID_EXPONENTS, FsInstance, fs_ratio_ensemble, fs_sides
)
from morrey_lab.services.generators import derive_seed
from morrey_lab.services.lattice import (
    BoundingBox, FiniteSequence, PrefixSumTable, odd_cube, support_hull
)
from morrey_lab.services.maximal import (
    ULP_SLACK, boundedness_ratio, certified_sup_maximal, equivalence_check,
    maximal_at, theoretical_constant, windowed_morrey_norm_of_maximal
)
from morrey_lab.services.morrey_norm import morrey_norm
from morrey_lab.services.oracles import (
    brute_maximal_at, brute_morrey_norm, brute_sup_maximal, direct_box_sum
)
from morrey_lab.services.riesz import (
    conjugate_exponents, hedberg_optimized_ratio, optimal_split_radius,
    riesz_boundedness_ratio, sandwich_check, windowed_riesz_norm
)

logger = logging.getLogger(__name__)

MORREY_PAIRS = [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (2.0, 3.0), (1.5, 4.0)]
HEDBERG_PARAMS = RieszParams(alpha=0.5, d=1, p=4.0 / 3.0, q=1.5)

# A group returns (checked, violations, detail)
GroupResult = Tuple[int, int, str]


def random_sequence(
    rng: np.random.Generator,
    d: int,
    half_width: int,
    density: float = 0.5,
    signed: bool = False
) -> FiniteSequence:
    """Random sequence on [-w, w]^d with at least one nonzero."""
    box = BoundingBox.around((0,) * d, half_width)
    values = rng.uniform(0.0, 1.0, size=box.shape) * (rng.random(box.shape) < density)
    if signed:
        values = values * rng.choice([-1.0, 1.0], size=box.shape)
    if not np.any(values):
        values[(half_width,) * d] = 1.0
    return FiniteSequence(box, values)


def _random_point(rng: np.random.Generator, box: BoundingBox) -> Tuple[int, ...]:
    return tuple(int(rng.integers(lo, hi + 1)) for lo, hi in zip(box.lo, box.hi))


def _rel_close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


class PropertySuite:
    """
    Named property groups with per-group instance counts.

    Each group draws from its own seed sub-stream ("verify", name), so a
    group's outcome does not depend on which other groups ran.
    """

    def __init__(self, counts: Optional[VerifySection] = None):
        self.counts = counts or VerifySection()
        self.groups: Dict[str, Callable[[np.random.Generator, VerifySection], GroupResult]] = {
            "cube-sums": self.check_cube_sums,
            "morrey-truncation": self.check_morrey_truncation,
            "maximal-oracle": self.check_maximal_oracle,
            "equivalence": self.check_equivalence,
            "sup-bound": self.check_sup_bound,
            "fefferman-stein": self.check_fefferman_stein,
            "maximal-boundedness": self.check_maximal_boundedness,
            "sandwich": self.check_sandwich,
            "hedberg": self.check_hedberg,
            "riesz-boundedness": self.check_riesz_boundedness,
        }

    def run(
        self,
        seed: int,
        counts: Optional[VerifySection] = None,
        names: Optional[List[str]] = None
    ) -> List[PropertyResult]:
        """Run the named groups (all by default); `counts` overrides the suite defaults."""
        counts = counts or self.counts
        results = []
        for name in names or list(self.groups):
            if name not in self.groups:
                raise ValueError(f"Unknown property group {name!r}")
            rng = np.random.default_rng(derive_seed(seed, "verify", name))
            start = time.perf_counter()
            checked, violations, detail = self.groups[name](rng, counts)
            result = PropertyResult(
                name=name,
                passed=violations == 0,
                checked=checked,
                violations=violations,
                detail=detail,
                seconds=round(time.perf_counter() - start, 3)
            )
            level = logging.INFO if result.passed else logging.ERROR
            logger.log(level, f"{name}: {'PASS' if result.passed else 'FAIL'} "
                              f"({violations}/{checked} violations, {result.seconds}s)")
            results.append(result)
        return results

    # --- Groups ---

    def check_cube_sums(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for i in range(counts.cube_sums):
            d = int(rng.integers(1, 4))
            side = int(rng.integers(1, {1: 34, 2: 17, 3: 9}[d]))
            box = BoundingBox((0,) * d, (side - 1,) * d)
            integer = i % 2 == 1
            if integer:
                field = rng.integers(0, 1000, size=box.shape).astype(np.float64)
            else:
                field = rng.uniform(0.0, 1.0, size=box.shape)
            table = PrefixSumTable.build(field, box)
            center = tuple(int(c) for c in rng.integers(-2, side + 2, size=d))
            region = odd_cube(center, int(rng.integers(0, side))).to_box()
            fast = float(table.box_sums(np.asarray([region.lo]), np.asarray([region.hi]))[0])
            slow = direct_box_sum(field, box, region)
            checked += 1
            if integer:
                violations += int(fast != slow)
            elif abs(fast - slow) > 1e-12 * max(abs(slow), 1e-300):
                violations += 1
        return checked, violations, "prefix table vs direct enumeration (exact on integer fields)"

    def check_morrey_truncation(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for _ in range(counts.morrey_truncation):
            d = int(rng.integers(1, 3))
            x = random_sequence(rng, d, 4 if d == 1 else 3, signed=True).scaled(5.0)
            p = float(rng.uniform(1.0, 4.0))
            params = MorreyParams(p=p, q=float(rng.uniform(p, 4.0)))
            checked += 1
            if not _rel_close(morrey_norm(x, params).value, brute_morrey_norm(x, params), 1e-12):
                violations += 1
        for d in (1, 2):
            checked += 1
            if morrey_norm(FiniteSequence.spike((0,) * d), MorreyParams(p=1.0, q=2.0)).value != 1.0:
                violations += 1
            for n0 in range(4):
                params = MorreyParams(p=1.0, q=2.0)
                x = FiniteSequence.indicator(odd_cube((0,) * d, n0))
                checked += 1
                if not _rel_close(morrey_norm(x, params).value, (2 * n0 + 1) ** (d / 2.0), 1e-12):
                    violations += 1
        return checked, violations, "certified enumeration vs N <= 3 N0 brute force"

    def check_maximal_oracle(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for _ in range(counts.maximal_oracle):
            d = int(rng.integers(1, 4))
            x = random_sequence(rng, d, 1 if d == 3 else 2, signed=True)
            point = _random_point(rng, support_hull(x).inflate(2))
            for variant in MaximalVariant:
                checked += 1
                if not _rel_close(maximal_at(x, point, variant),
                                  brute_maximal_at(x, point, variant), 1e-12):
                    violations += 1
        delta = FiniteSequence.spike((0,))
        pinned = [
            (maximal_at(delta, (0,)), 1.0),
            (maximal_at(delta, (2,)), 1.0 / 5.0),
            (maximal_at(delta, (0,), MaximalVariant.EVEN), 0.5),
            (maximal_at(FiniteSequence.spike((0, 0)), (1, 1)), 1.0 / 9.0),
        ]
        for observed, expected in pinned:
            checked += 1
            if observed != expected:
                violations += 1
        return checked, violations, "certified truncation vs N <= N_cert + 5"

    def check_equivalence(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for _ in range(counts.equivalence):
            d = int(rng.integers(1, 3))
            x = random_sequence(rng, d, 2)
            report = equivalence_check(x, support_hull(x).inflate(4))
            checked += report.points_checked
            violations += report.violation_count
        return checked, violations, "M <= 2^d Mhat, Mhat <= (3/2)^d M, M <= Mtilde <= 2^d M"

    def check_sup_bound(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for _ in range(counts.sup_bound):
            d = int(rng.integers(1, 3))
            x = random_sequence(rng, d, 3 if d == 1 else 2)
            sup = certified_sup_maximal(x)
            checked += 1
            if not _rel_close(sup, brute_sup_maximal(x), 1e-12):
                violations += 1
            for p, q in MORREY_PAIRS:
                checked += 1
                if sup > morrey_norm(x, MorreyParams(p=p, q=q)).value * (1.0 + ULP_SLACK):
                    violations += 1
            hull = support_hull(x)
            for _ in range(counts.sup_bound_outside_points):
                point = tuple(int(c) for c in rng.integers(-12, 13, size=d))
                checked += 1
                if maximal_at(x, point) > maximal_at(x, hull.clamp(point)):
                    violations += 1
        return checked, violations, "sup Mx equals brute force and <= ||x||_{l^p_q}; clamp domination"

    def check_fefferman_stein(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        seed = int(rng.integers(2**31))
        trials = counts.fefferman_stein
        for d in GRID_DIMS:
            spec = GeneratorSpec(kind="multi-spike", dim=d, radius=3, count=3,
                                 value_low=0.1, value_high=1.0, offset=2)
            for p in GRID_EXPONENTS:
                for variant in MaximalVariant:
                    report = fs_ratio_ensemble(spec, trials, p, variant, seed=seed)
                    checked += 1
                    if not np.isfinite(report.max_ratio):
                        violations += 1
                    rerun = fs_ratio_ensemble(spec, trials, p, variant, seed=seed, threads=2)
                    checked += 1
                    if rerun.max_ratio != report.max_ratio:
                        violations += 1
        x = random_sequence(rng, 1, 3)
        phi = random_sequence(rng, 1, 3)
        lhs, rhs = fs_sides(FsInstance(x=x, phi=phi, p=2.0))
        scaled = fs_sides(FsInstance(x=x.scaled(-3.0), phi=phi.scaled(2.0), p=2.0))
        shifted = fs_sides(FsInstance(x=x.shifted((7,)), phi=phi.shifted((7,)), p=2.0))
        checked += 2
        if not _rel_close(scaled[0] / scaled[1], lhs / rhs, 1e-10):
            violations += 1
        if not _rel_close(shifted[0] / shifted[1], lhs / rhs, 1e-12):
            violations += 1
        return checked, violations, "ratios finite, thread-independent, scale and shift invariant"

    def check_maximal_boundedness(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        inputs = [FiniteSequence.spike((0,)), FiniteSequence.indicator(odd_cube((0,), 2)),
                  FiniteSequence.spike((0, 0))]
        for x in inputs:
            for p, q in [(2.0, 3.0), (1.5, 4.0)]:
                params = MorreyParams(p=p, q=q)
                windowed = windowed_morrey_norm_of_maximal(x, params, 16)
                ratio = boundedness_ratio(x, params, 16, windowed=windowed)
                checked += 1
                if not (np.isfinite(ratio) and ratio >= 1.0 - ULP_SLACK and windowed.stabilized):
                    violations += 1
        for _ in range(counts.maximal_boundedness):
            x = random_sequence(rng, 1, 3)
            ratio = boundedness_ratio(x, MorreyParams(p=2.0, q=2.0), 8)
            checked += 1
            if not (np.isfinite(ratio) and ratio >= 1.0 - ULP_SLACK):
                violations += 1
        checked += 2
        if not _rel_close(theoretical_constant(1.0, 1, MorreyParams(p=2.0, q=2.0)), 6.0, 1e-9):
            violations += 1
        if not _rel_close(theoretical_constant(1.0, 1, MorreyParams(p=2.0, q=4.0)),
                          20.48528137423857, 1e-9):
            violations += 1
        return checked, violations, "windowed ||Mx|| / ||x|| finite, >= 1, stabilized for p < q"

    def check_sandwich(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        for _ in range(counts.sandwich):
            d = int(rng.integers(1, 3))
            x = random_sequence(rng, d, 2, signed=True)
            checked += 1
            if sandwich_check(x, _random_point(rng, support_hull(x).inflate(2))).violated:
                violations += 1
        row = sandwich_check(FiniteSequence.spike((0,)), (0,))
        checked += 1
        if row.mid != row.high:
            violations += 1
        return checked, violations, "(2/3)^d S <= Mx <= 2^d S"

    def check_hedberg(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        rp = HEDBERG_PARAMS
        for _ in range(counts.hedberg):
            x = random_sequence(rng, 1, 4, signed=True)
            norm = morrey_norm(x, rp.morrey).value
            k = _random_point(rng, support_hull(x).inflate(3))
            r = optimal_split_radius(x, rp, k, norm=norm)
            if r is None:
                continue
            mx = maximal_at(x, k)
            checked += 1
            if not (r >= 1.0 - 1e-12 and _rel_close(r ** rp.alpha * mx,
                                                       r ** (rp.alpha - rp.d / rp.q) * norm, 1e-9)):
                violations += 1
        checked += 1
        value = hedberg_optimized_ratio(FiniteSequence.spike((0,)), rp, (2,))
        if abs(value - 2 ** -0.5 / 0.2 ** 0.25) > 1e-12:
            violations += 1
        return checked, violations, "balance identity at the optimal split radius"

    def check_riesz_boundedness(self, rng: np.random.Generator, counts: VerifySection) -> GroupResult:
        checked = violations = 0
        expected = [(HEDBERG_PARAMS, (16.0 / 3.0, 6.0)),
                    (RieszParams(alpha=0.5, d=2, p=2.0, q=3.0), (8.0, 12.0))]
        for rp, (s, t) in expected:
            got = conjugate_exponents(rp)
            checked += 1
            if not (_rel_close(got[0], s, 1e-12) and _rel_close(got[1], t, 1e-12)):
                violations += 1
        x = FiniteSequence.spike((0,))
        windowed = windowed_riesz_norm(x, HEDBERG_PARAMS, 16)
        ratio = riesz_boundedness_ratio(x, HEDBERG_PARAMS, 16, windowed=windowed)
        scaled = riesz_boundedness_ratio(x.scaled(-2.5), HEDBERG_PARAMS, 16)
        checked += 3
        if not np.isfinite(ratio):
            violations += 1
        if not _rel_close(ratio, scaled, 1e-10):
            violations += 1
        if not windowed.stabilized:
            violations += 1
        return checked, violations, "(s, t) arithmetic; windowed ||I x|| / ||x|| stable"


# Singleton instance
property_suite = PropertySuite()


def create_property_suite(counts: Optional[VerifySection] = None) -> PropertySuite:
    """Factory function to create a suite with custom per-group counts."""
    return PropertySuite(counts=counts)
