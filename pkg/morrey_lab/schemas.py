"""Pydantic schemas for parameters, experiment configs and reports."""
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from morrey_lab.config import DEFAULT_MARGIN, DEFAULT_SEED, DEFAULT_THREADS, MAX_SEED, OUTPUT_DIR
from morrey_lab.exceptions import ParameterDomainError


class MaximalVariant(str, Enum):
    """Odd (M), even (M-hat) and uncentered (M-tilde) maximal operators."""
    ODD = "odd"
    EVEN = "even"
    UNCENTERED = "uncentered"


# --- Parameter Models ---

class MorreyParams(BaseModel):
    """Exponent pair (p, q) of the Morrey space l^p_q, 1 <= p <= q < inf."""
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., description="Inner exponent p")
    q: float = Field(..., description="Scaling exponent q")

    @model_validator(mode="after")
    def check_domain(self):
        if not (1.0 <= self.p <= self.q < float("inf")):
            raise ParameterDomainError(
                f"Morrey space l^p_q requires 1 <= p <= q < inf, got p={self.p}, q={self.q}"
            )
        return self


class RieszParams(BaseModel):
    """Parameters of the Riesz potential bound: 0 < alpha < d, 1 < p < q < d/alpha."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., description="Order of the potential")
    d: int = Field(..., description="Lattice dimension")
    p: float = Field(..., description="Inner exponent of the source space")
    q: float = Field(..., description="Scaling exponent of the source space")

    @model_validator(mode="after")
    def check_domain(self):
        if self.d < 1:
            raise ParameterDomainError(f"Dimension must be >= 1, got {self.d}")
        if not (0.0 < self.alpha < self.d):
            raise ParameterDomainError(
                f"Riesz potential bound requires 0 < alpha < d, got alpha={self.alpha}, d={self.d}"
            )
        if not (1.0 < self.p < self.q < self.d / self.alpha):
            raise ParameterDomainError(
                "Riesz potential bound requires 1 < p < q < d/alpha, "
                f"got p={self.p}, q={self.q}, d/alpha={self.d / self.alpha}"
            )
        return self

    @property
    def morrey(self) -> MorreyParams:
        return MorreyParams(p=self.p, q=self.q)


# --- Generator and Experiment Config ---

GeneratorKind = Literal[
    "spike", "multi-spike", "cube-indicator", "uniform-random-box", "power-decay-truncated"
]

TaskName = Literal["norm", "maximal", "riesz", "fs-check", "sandwich", "verify-all", "gen"]


class GeneratorSpec(BaseModel):
    """Recipe for a deterministic finitely supported test sequence."""
    model_config = ConfigDict(extra="forbid")

    kind: GeneratorKind = Field("spike", description="Sequence family")
    dim: int = Field(1, ge=1, description="Lattice dimension d")
    radius: int = Field(0, ge=0, description="Cube/box half-width or power-decay cutoff R")
    count: int = Field(1, ge=1, description="Number of spikes for multi-spike")
    value_low: float = Field(1.0, description="Lower end of the value range")
    value_high: float = Field(1.0, description="Upper end of the value range")
    offset: int = Field(0, ge=0, description="Maximum |offset| of the random center per axis")
    beta: float = Field(0.5, gt=0, description="Decay exponent for power-decay-truncated")
    density: float = Field(1.0, gt=0, le=1, description="Fraction of nonzero cells in random boxes")
    seed: Optional[int] = Field(
        None, ge=0, le=MAX_SEED, description="Seed; derived from the master seed when absent"
    )

    @model_validator(mode="after")
    def check_range(self):
        if self.value_low > self.value_high:
            raise ValueError(f"value_low {self.value_low} exceeds value_high {self.value_high}")
        return self


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: TaskName = Field(..., description="Harness to run")
    seed: int = Field(DEFAULT_SEED, ge=0, le=MAX_SEED, description="Master seed (unsigned 64-bit)")
    threads: int = Field(DEFAULT_THREADS, ge=1, description="Worker threads")
    input: Optional[str] = Field(None, description="Sequence file used instead of the generator")


class ParametersSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: float = Field(2.0, description="Exponent p")
    q: float = Field(2.0, description="Exponent q")
    alpha: float = Field(0.5, description="Riesz order alpha")
    variant: MaximalVariant = Field(MaximalVariant.ODD, description="Maximal operator variant")
    margin: int = Field(DEFAULT_MARGIN, ge=0, description="Window margin L around the support hull")
    trials: int = Field(100, ge=1, description="Ensemble size")
    radii: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0],
                               description="Split radii r for the Hedberg bound")
    phi_mode: Literal["independent", "same", "cube-weight"] = Field(
        "independent", description="How the Fefferman-Stein weight is drawn"
    )
    adversarial_steps: int = Field(0, ge=0, description="Hill-climbing steps after the ensemble")
    constant_k: float = Field(1.0, gt=0, description="K used for the theoretical constant")
    grid: bool = Field(False, description="fs-check: every (d, p, variant) cell instead of one")


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: str = Field(str(OUTPUT_DIR), description="Directory for CSV/JSON artifacts")
    baseline: Optional[str] = Field(None, description="Baseline JSON path")
    timestamp: bool = Field(True, description="Write a timestamp header line in CSV files")
    ledger: bool = Field(True, description="Log the run to the SQLite ledger")


class VerifySection(BaseModel):
    """Instances per verify-all property group; the defaults are the full acceptance counts."""
    model_config = ConfigDict(extra="forbid")

    cube_sums: int = Field(1000, ge=1, description="(field, cube) pairs against direct slicing")
    morrey_truncation: int = Field(500, ge=1, description="Sequences against the extended brute force")
    maximal_oracle: int = Field(500, ge=1, description="(x, point) instances, every variant")
    equivalence: int = Field(200, ge=1, description="Sequences checked over hull +- 4")
    sup_bound: int = Field(200, ge=1, description="Sequences for the certified sup")
    sup_bound_outside_points: int = Field(50, ge=0, description="Clamp checks per sup-bound sequence")
    fefferman_stein: int = Field(1000, ge=1, description="Trials per (d, p, variant) cell")
    maximal_boundedness: int = Field(20, ge=1, description="Random sequences for the windowed ratio")
    sandwich: int = Field(500, ge=1, description="(x, point) instances")
    hedberg: int = Field(1000, ge=1, description="(x, k) draws for the balance identity")


class ExperimentConfig(BaseModel):
    """Full experiment configuration; unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSection
    parameters: ParametersSection = Field(default_factory=ParametersSection)
    generator: GeneratorSpec = Field(default_factory=GeneratorSpec)
    output: OutputSection = Field(default_factory=OutputSection)
    verify: VerifySection = Field(default_factory=VerifySection)


# --- Result Models ---

class NormCertificate(BaseModel):
    """Audit trail of an exact Morrey norm: value, maximizing cube, enumeration size."""
    value: float = Field(..., description="Exact norm value")
    argmax_center: List[int] = Field(..., description="Center m of the maximizing odd cube")
    argmax_radius: int = Field(..., description="Radius N of the maximizing odd cube")
    candidate_count: int = Field(..., description="Number of (m, N) candidates evaluated")
    truncation_radius: int = Field(..., description="N0: no larger radius can win")


class WindowedNorm(BaseModel):
    """Morrey norm of a field restricted to cubes inside a window (a lower bound)."""
    value: float = Field(..., description="Sup of the candidate over cubes inside the window")
    argmax_center: List[int] = Field(default_factory=list)
    argmax_radius: int = Field(0)
    window_lo: List[int] = Field(default_factory=list)
    window_hi: List[int] = Field(default_factory=list)
    margin: int = Field(0, description="Window margin L")
    doubled_value: Optional[float] = Field(None, description="Same quantity at margin 2L")
    drift: Optional[float] = Field(None, description="Relative change from L to 2L")
    stabilized: bool = Field(False, description="Drift below the stabilization tolerance")
    outside_bound: Optional[float] = Field(None, description="Certified sup of the field outside the window")


class RatioRow(BaseModel):
    """One ensemble trial."""
    trial: int
    seed: int
    lhs: float
    rhs: float
    ratio: Optional[float] = Field(None, description="lhs/rhs; None when the trial is skipped")
    skipped: bool = False


class RatioReport(BaseModel):
    """Empirical LHS/RHS statistics of an inequality over an ensemble."""
    trials: int = Field(..., description="Trials attempted")
    evaluated: int = Field(..., description="Trials with rhs > 0")
    skipped: int = Field(..., description="Trials skipped because rhs = 0")
    max_ratio: float = Field(..., description="Max ratio over evaluated rows")
    argmax_trial: Optional[int] = None
    argmax_seed: Optional[int] = None
    rows: List[RatioRow] = Field(default_factory=list)
    parameters: Dict[str, Any] = Field(default_factory=dict)

    def running_max(self) -> List[float]:
        """Running max of the ratio in trial order."""
        best = 0.0
        out = []
        for row in self.rows:
            if row.ratio is not None:
                best = max(best, row.ratio)
            out.append(best)
        return out


class EquivalenceRow(BaseModel):
    """Values of the three maximal operators at one point."""
    point: List[int]
    M: float
    Mhat: float
    Mtilde: float
    violations: List[str] = Field(default_factory=list)


class EquivalenceReport(BaseModel):
    """Pointwise comparison of M, M-hat and M-tilde over a window."""
    rows: List[EquivalenceRow] = Field(default_factory=list)
    points_checked: int = 0
    violation_count: int = 0


class SandwichRow(BaseModel):
    point: List[int]
    low: float
    mid: float
    high: float
    violated: bool = False


class BaselineDrift(BaseModel):
    key: str
    pinned: float
    observed: float
    tolerance: float


class BaselineComparison(BaseModel):
    """Outcome of comparing run values with a pinned baseline file."""
    path: str
    pinned_now: bool = Field(False, description="True when this run wrote the baseline")
    drifts: List[BaselineDrift] = Field(default_factory=list)
    missing: List[str] = Field(default_factory=list, description="Keys absent from the pinned file")

    @property
    def ok(self) -> bool:
        return not self.drifts


class PropertyResult(BaseModel):
    """Outcome of one verify-all property group."""
    name: str
    passed: bool
    checked: int = 0
    violations: int = 0
    detail: str = ""
    seconds: float = 0.0


class RunSummary(BaseModel):
    """JSON summary written by every CLI run."""
    run_id: str
    task: str
    status: str = Field(..., description="ok, violation, drift or error")
    exit_code: int = 0
    seed: int
    parameters: Dict[str, Any] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    baseline: Optional[BaselineComparison] = None
    warnings: Optional[List[str]] = None
    created_at: Optional[datetime] = None
