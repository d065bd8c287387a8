"""Regression baselines: first-run pinning and drift detection."""
import json
import logging
from pathlib import Path
from typing import Dict, Union

from morrey_lab.config import BASELINE_RTOL
from morrey_lab.exceptions import ConfigError
from morrey_lab.schemas import BaselineComparison, BaselineDrift

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class BaselineService:
    """
    Pins empirical values to a JSON file on first run and checks them afterwards.

    File format: {"<key>": {"value": <float>, "tolerance": <float>}, ...}.
    A pinned file is never rewritten by a comparison.
    """

    def __init__(self, rtol: float = BASELINE_RTOL):
        self.rtol = rtol

    def load(self, path: PathLike) -> Dict[str, Dict[str, float]]:
        """Read a baseline file."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Baseline file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Baseline file {path} must hold a JSON object")
        for key, entry in data.items():
            if not isinstance(entry, dict) or "value" not in entry:
                raise ConfigError(f"Baseline entry {key!r} in {path} lacks a value")
        return data

    def pin(self, path: PathLike, values: Dict[str, float]) -> Path:
        """Write a new baseline file; refuses to overwrite an existing one."""
        path = Path(path)
        if path.exists():
            raise ConfigError(f"Baseline {path} already exists and is not overwritten")
        path.parent.mkdir(parents=True, exist_ok=True)
        entries = {
            key: {"value": float(value), "tolerance": self.rtol}
            for key, value in sorted(values.items())
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(entries, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Pinned {len(entries)} baseline values to {path}")
        return path

    def compare(self, path: PathLike, values: Dict[str, float]) -> BaselineComparison:
        """Drift is |new - pinned| > tolerance * max(1, |pinned|)."""
        pinned = self.load(path)
        comparison = BaselineComparison(path=str(path))
        for key, observed in sorted(values.items()):
            entry = pinned.get(key)
            if entry is None:
                comparison.missing.append(key)
                continue
            reference = float(entry["value"])
            tolerance = float(entry.get("tolerance", self.rtol))
            if abs(float(observed) - reference) > tolerance * max(1.0, abs(reference)):
                comparison.drifts.append(BaselineDrift(
                    key=key, pinned=reference, observed=float(observed), tolerance=tolerance
                ))
        if comparison.drifts:
            logger.error(f"Baseline drift in {path}: {[d.key for d in comparison.drifts]}")
        if comparison.missing:
            logger.warning(f"Keys not pinned in {path}: {comparison.missing}")
        return comparison

    def compare_or_pin(self, path: PathLike, values: Dict[str, float]) -> BaselineComparison:
        """Pin when the file is absent, otherwise compare against it."""
        if not Path(path).exists():
            self.pin(path, values)
            return BaselineComparison(path=str(path), pinned_now=True)
        return self.compare(path, values)


# Singleton instance
baseline_service = BaselineService()


def create_baseline_service(rtol: float = BASELINE_RTOL) -> BaselineService:
    """Factory function to create a baseline service with a custom default tolerance."""
    return BaselineService(rtol=rtol)
