"""Experiment runner - orchestrates one configured task end to end."""
import configparser
import json
import logging
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError
from sqlalchemy.orm import Session

from morrey_lab.exceptions import ConfigError, ParameterDomainError
from morrey_lab.models import ExperimentRun
from morrey_lab.schemas import (
    ExperimentConfig, GeneratorSpec, MaximalVariant, MorreyParams, RieszParams, RunSummary
)
from morrey_lab.services.baseline_service import BaselineService, baseline_service
from morrey_lab.services.fs_harness import (
    GRID_DIMS, GRID_EXPONENTS, fs_adversarial_search, fs_ratio_ensemble
)
from morrey_lab.services.generators import derive_seed, generate
from morrey_lab.services.lattice import FiniteSequence, support_hull
from morrey_lab.services.maximal import (
    boundedness_ratio, certified_sup_maximal, equivalence_check, final_bound_constant,
    maximal_field, maximal_tail_bound, theoretical_constant, windowed_morrey_norm_of_maximal
)
from morrey_lab.services.morrey_norm import morrey_norm
from morrey_lab.services.riesz import (
    conjugate_exponents, hedberg_optimized_ratio, hedberg_transfer_check,
    riesz_boundedness_ratio, riesz_field, sandwich_check, windowed_riesz_norm
)
from morrey_lab.services.sequence_io import read_sequence, write_sequence
from morrey_lab.services.verify_suite import PropertySuite, property_suite

logger = logging.getLogger(__name__)

CONFIG_SECTIONS = ("experiment", "parameters", "generator", "output", "verify")

# Tasks that read or generate an input sequence
SEQUENCE_TASKS = {"norm", "maximal", "riesz", "sandwich", "gen"}


def load_config(path: str) -> ExperimentConfig:
    """Parse an INI experiment file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"Cannot read config {path}: {e}")

    raw: Dict[str, Dict[str, Any]] = {}
    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            raise ConfigError(f"Unknown config section [{section}] in {path}")
        raw[section] = dict(parser.items(section))
    if "radii" in raw.get("parameters", {}):
        raw["parameters"]["radii"] = [
            float(r) for r in raw["parameters"]["radii"].split(",") if r.strip()
        ]
    return parse_config(raw, source=path)


def parse_config(raw: Dict[str, Any], source: str = "<arguments>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {source}: {e}")


def _point_columns(d: int) -> List[str]:
    return [f"k{i + 1}" for i in range(d)]


class ExperimentRunner:
    """Runs one ExperimentConfig and writes its CSV/JSON artifacts."""

    def __init__(
        self,
        baselines: Optional[BaselineService] = None,
        properties: Optional[PropertySuite] = None
    ):
        self.baselines = baselines or baseline_service
        self.properties = properties or property_suite

    def run(self, config: ExperimentConfig, db: Optional[Session] = None) -> RunSummary:
        """
        Main run flow:
        1. Load or generate the input sequence
        2. Validate the theorem hypotheses for the task
        3. Compute the task
        4. Write CSV and compare/pin the baseline
        5. Log the run to the ledger and write the JSON summary
        """
        exp = config.experiment
        task = exp.task
        run_id = f"RUN-{datetime.now().strftime('%Y%m%d')}-{uuid.uuid4().hex[:8].upper()}"
        out_dir = Path(config.output.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        warnings: List[str] = []
        logger.info(f"{run_id}: task={task} seed={exp.seed} out={out_dir}")

        # Step 1: Input sequence
        x = self._load_input(config) if task in SEQUENCE_TASKS else None

        # Step 2: Hypotheses
        self.validate_hypotheses(config, x)

        # Step 3: Compute
        handler = getattr(self, f"_run_{task.replace('-', '_')}")
        rows, results, baseline_values, violations = handler(config, x)

        # Step 4: Artifacts and baseline
        stem = task.replace("-", "_")
        if rows is not None:
            self._write_csv(rows, out_dir / f"{stem}.csv", config.output.timestamp)
        comparison = None
        if config.output.baseline and baseline_values:
            comparison = self.baselines.compare_or_pin(config.output.baseline, baseline_values)

        status = "ok"
        if violations:
            status = "violation"
        elif comparison is not None and not comparison.ok:
            status = "drift"

        summary = RunSummary(
            run_id=run_id,
            task=task,
            status=status,
            exit_code=0 if status == "ok" else 1,
            seed=exp.seed,
            parameters=config.parameters.model_dump(mode="json"),
            results=results,
            baseline=comparison,
            warnings=warnings or None,
            created_at=datetime.now(timezone.utc)
        )

        # Step 5: Ledger and summary
        if config.output.ledger:
            try:
                self._log_run(db, summary, results.get("headline"))
            except Exception as e:
                logger.warning(f"Failed to log run: {e}")
                if summary.warnings is None:
                    summary.warnings = []
                summary.warnings.append("Run ledger logging failed")

        with open(out_dir / f"{stem}.json", "w", encoding="utf-8") as f:
            f.write(summary.model_dump_json(indent=2))
            f.write("\n")
        logger.info(f"{run_id}: status={status}")
        return summary

    # --- Steps ---

    def _load_input(self, config: ExperimentConfig) -> FiniteSequence:
        if config.experiment.input:
            return read_sequence(config.experiment.input)
        spec = config.generator
        seed = spec.seed if spec.seed is not None else derive_seed(config.experiment.seed, "generator")
        return generate(spec, seed=seed)

    def validate_hypotheses(self, config: ExperimentConfig, x: Optional[FiniteSequence]):
        """Raise ParameterDomainError naming the hypothesis a task's parameters violate."""
        params = config.parameters
        task = config.experiment.task
        if task == "norm":
            MorreyParams(p=params.p, q=params.q)
        elif task == "maximal":
            MorreyParams(p=params.p, q=params.q)
            if params.p <= 1:
                raise ParameterDomainError(
                    f"Maximal operator bound requires 1 < p <= q < inf, got p={params.p}"
                )
        elif task == "fs-check" and not params.grid:
            if params.p <= 1:
                raise ParameterDomainError(
                    f"Fefferman-Stein inequality requires 1 < p < inf, got p={params.p}"
                )
        elif task == "riesz":
            RieszParams(alpha=params.alpha, d=x.dim, p=params.p, q=params.q)
            if any(r < 1 for r in params.radii):
                raise ParameterDomainError(f"Split radii must be >= 1, got {params.radii}")

    def _write_csv(self, rows: List[Dict[str, Any]], path: Path, timestamp: bool):
        """Rows in fixed order; an optional first line carries the timestamp."""
        frame = pd.DataFrame(rows)
        with open(path, "w", encoding="utf-8", newline="") as f:
            if timestamp:
                f.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
            frame.to_csv(f, index=False, float_format="%.17g")

    def _log_run(self, db: Optional[Session], summary: RunSummary, headline: Optional[float]):
        """Log a run to the ledger."""
        from morrey_lab.database import get_db_context, init_db

        record = ExperimentRun(
            run_id=summary.run_id,
            task=summary.task,
            seed=str(summary.seed),
            parameters=json.dumps(summary.parameters),
            status=summary.status,
            exit_code=summary.exit_code,
            headline=headline,
            summary=summary.model_dump_json()
        )
        if db is not None:
            db.add(record)
            db.commit()
            return
        init_db()
        with get_db_context() as session:
            session.add(record)

    # --- Tasks: each returns (csv rows, results, baseline values, violation count) ---

    def _run_norm(self, config: ExperimentConfig, x: FiniteSequence):
        params = MorreyParams(p=config.parameters.p, q=config.parameters.q)
        cert = morrey_norm(x, params)
        row = {"p": params.p, "q": params.q, "value": cert.value,
               "argmax_center": " ".join(map(str, cert.argmax_center)),
               "argmax_radius": cert.argmax_radius, "candidates": cert.candidate_count,
               "truncation_radius": cert.truncation_radius}
        results = {"headline": cert.value, "norm": cert.model_dump()}
        return [row], results, {"norm": cert.value}, 0

    def _run_maximal(self, config: ExperimentConfig, x: FiniteSequence):
        params = config.parameters
        morrey = MorreyParams(p=params.p, q=params.q)
        hull = support_hull(x)
        if hull.is_empty:
            raise ParameterDomainError("The maximal task needs a nonzero input sequence")
        window = hull.inflate(params.margin)

        field = maximal_field(x, window, params.variant, threads=config.experiment.threads)
        write_sequence(field.as_sequence(), Path(config.output.out_dir) / "maximal_field.txt",
                       dense=True, comments=[f"variant {params.variant.value}"])
        report = equivalence_check(x, window)
        columns = _point_columns(x.dim)
        rows = []
        for row in report.rows:
            entry = dict(zip(columns, row.point))
            entry.update({"M": row.M, "Mhat": row.Mhat, "Mtilde": row.Mtilde,
                          "tail_bound": maximal_tail_bound(x, row.point),
                          "violations": ";".join(row.violations)})
            rows.append(entry)

        windowed = windowed_morrey_norm_of_maximal(x, morrey, params.margin,
                                                   threads=config.experiment.threads)
        ratio = boundedness_ratio(x, morrey, params.margin, windowed=windowed)
        results = {
            "headline": ratio,
            "variant": params.variant.value,
            "certified_sup": certified_sup_maximal(x),
            "windowed_norm": windowed.model_dump(),
            "boundedness_ratio": ratio,
            "theoretical_constant": theoretical_constant(params.constant_k, x.dim, morrey),
            "final_bound_constant": final_bound_constant(params.constant_k, x.dim, morrey),
            "equivalence_violations": report.violation_count,
        }
        return rows, results, {"boundedness_ratio": ratio}, report.violation_count

    def _run_riesz(self, config: ExperimentConfig, x: FiniteSequence):
        params = config.parameters
        rp = RieszParams(alpha=params.alpha, d=x.dim, p=params.p, q=params.q)
        s, t = conjugate_exponents(rp)
        hull = support_hull(x)
        if hull.is_empty:
            raise ParameterDomainError("The riesz task needs a nonzero input sequence")
        norm = morrey_norm(x, rp.morrey).value
        window = hull.inflate(params.margin)
        threads = config.experiment.threads

        potential = riesz_field(x, rp, window, threads=threads).values.reshape(-1)
        mx = maximal_field(x, window, MaximalVariant.ODD, threads=threads).values.reshape(-1)
        columns = _point_columns(x.dim)
        rows = []
        hedberg_max = {r: 0.0 for r in params.radii}
        optimized_max = 0.0
        for point, value, m in zip(window.points(), potential, mx):
            entry = dict(zip(columns, point))
            entry.update({"I_alpha": value, "Mx": m})
            for r in params.radii:
                ratio = abs(value) / (r ** rp.alpha * m + r ** (rp.alpha - rp.d / rp.q) * norm)
                entry[f"hedberg_r{r:g}"] = ratio
                hedberg_max[r] = max(hedberg_max[r], ratio)
            optimized = hedberg_optimized_ratio(x, rp, point, norm=norm)
            entry["hedberg_optimized"] = optimized
            optimized_max = max(optimized_max, optimized)
            rows.append(entry)

        windowed = windowed_riesz_norm(x, rp, params.margin, threads=threads)
        ratio = riesz_boundedness_ratio(x, rp, params.margin, windowed=windowed)
        transfer = hedberg_transfer_check(x, rp, params.margin)
        results = {
            "headline": ratio,
            "s": s,
            "t": t,
            "morrey_norm": norm,
            "windowed_norm": windowed.model_dump(),
            "riesz_boundedness_ratio": ratio,
            "hedberg_max": {f"{r:g}": v for r, v in hedberg_max.items()},
            "hedberg_optimized_max": optimized_max,
            "transfer": {"lhs": transfer[0], "rhs": transfer[1]},
        }
        baseline = {"riesz_boundedness_ratio": ratio, "hedberg_optimized_max": optimized_max}
        baseline.update({f"hedberg_max_r{r:g}": v for r, v in hedberg_max.items()})
        return rows, results, baseline, 0

    def _run_fs_check(self, config: ExperimentConfig, x: Optional[FiniteSequence]):
        params = config.parameters
        if params.grid:
            cells = [(d, p, variant) for d in GRID_DIMS for p in GRID_EXPONENTS
                     for variant in MaximalVariant]
        else:
            cells = [(config.generator.dim, params.p, params.variant)]

        rows: List[Dict[str, Any]] = []
        reports: List[Dict[str, Any]] = []
        baseline: Dict[str, float] = {}
        for d, p, variant in cells:
            gen = config.generator.model_copy(update={"dim": d})
            prefix = f"fs_d{d}_" if params.grid else "fs_"
            cell_rows, cell_results, values = self._fs_cell(config, gen, p, variant, prefix)
            if params.grid:
                cell_rows = [{"d": d, "p": p, "variant": variant.value, **row} for row in cell_rows]
            rows.extend(cell_rows)
            reports.append(cell_results)
            baseline.update(values)

        headline = max(r["report"]["max_ratio"] for r in reports)
        if params.grid:
            results = {"headline": headline, "cells": reports}
        else:
            results = {"headline": headline, **reports[0]}
        return rows, results, baseline, 0

    def _fs_cell(
        self,
        config: ExperimentConfig,
        gen: GeneratorSpec,
        p: float,
        variant: MaximalVariant,
        prefix: str
    ):
        """One (generator, p, variant) ensemble plus the optional adversarial search."""
        params = config.parameters
        exp = config.experiment
        report = fs_ratio_ensemble(gen, params.trials, p, variant, seed=exp.seed,
                                   phi_mode=params.phi_mode, threads=exp.threads)
        rows = [
            {"seed": row.seed, "trial": row.trial, "lhs": row.lhs, "rhs": row.rhs,
             "ratio": row.ratio, "running_max": best}
            for row, best in zip(report.rows, report.running_max())
        ]
        results = {"report": report.model_dump(exclude={"rows"})}
        key = f"{prefix}{variant.value}_p{p:g}_max_ratio"
        values = {key: report.max_ratio}
        if params.adversarial_steps:
            adversarial = fs_adversarial_search(gen, p, variant,
                                                steps=params.adversarial_steps, seed=exp.seed)
            results["adversarial"] = adversarial.model_dump(exclude={"rows"})
            values[f"{key}_adversarial"] = adversarial.max_ratio
        return rows, results, values

    def _run_sandwich(self, config: ExperimentConfig, x: FiniteSequence):
        hull = support_hull(x)
        window = hull.inflate(config.parameters.margin) if not hull.is_empty else hull
        columns = _point_columns(x.dim)
        rows = []
        violations = 0
        for point in window.points():
            row = sandwich_check(x, point)
            violations += int(row.violated)
            entry = dict(zip(columns, row.point))
            entry.update({"low": row.low, "mid": row.mid, "high": row.high,
                          "violated": row.violated})
            rows.append(entry)
        results = {"headline": float(violations), "points": len(rows), "violations": violations}
        return rows, results, {}, violations

    def _run_verify_all(self, config: ExperimentConfig, x: Optional[FiniteSequence]):
        properties = self.properties.run(config.experiment.seed, counts=config.verify)
        rows = [p.model_dump() for p in properties]
        failed = [p.name for p in properties if not p.passed]
        results = {"headline": float(len(failed)), "groups": rows, "failed": failed}
        return rows, results, {}, len(failed)

    def _run_gen(self, config: ExperimentConfig, x: FiniteSequence):
        path = Path(config.output.out_dir) / "sequence.txt"
        write_sequence(x, path, comments=[f"generator {config.generator.model_dump_json()}"])
        hull = support_hull(x)
        coords, values = x.support_points()
        rows = []
        columns = _point_columns(x.dim)
        for point, value in zip(coords, values):
            entry = dict(zip(columns, (int(c) for c in point)))
            entry["value"] = float(value)
            rows.append(entry)
        results = {"headline": x.total_abs(), "path": str(path), "dim": x.dim,
                   "hull_lo": list(hull.lo), "hull_hi": list(hull.hi),
                   "nonzeros": int(len(values)), "total_abs": x.total_abs()}
        return rows, results, {}, 0


# Singleton instance
experiment_runner = ExperimentRunner()


def create_experiment_runner(
    baselines: Optional[BaselineService] = None,
    properties: Optional[PropertySuite] = None
) -> ExperimentRunner:
    """Factory function to create a runner with its own collaborators."""
    return ExperimentRunner(baselines=baselines, properties=properties)
