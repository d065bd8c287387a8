#!/usr/bin/env python3
"""Run every experiment config once so that absent baselines get pinned."""
import os
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from morrey_lab.config import BASE_DIR, BASELINE_DIR, DATA_DIR, OUTPUT_DIR
from morrey_lab.services.experiment_runner import experiment_runner, load_config, parse_config


def run_config(path: Path) -> int:
    """Run one config with output under output/<name>; returns its exit code."""
    config = load_config(str(path))
    raw = config.model_dump(mode="json")
    raw["output"]["out_dir"] = str(OUTPUT_DIR / path.stem)
    raw["output"]["ledger"] = False
    summary = experiment_runner.run(parse_config(raw, source=str(path)))
    state = "-"
    if summary.baseline is not None:
        state = "pinned" if summary.baseline.pinned_now else ("ok" if summary.baseline.ok else "DRIFT")
    print(f"  {path.name:<32} status={summary.status:<10} baseline={state}")
    return summary.exit_code


def main():
    """Main pinning function."""
    # Baseline paths in configs are relative to the repository root
    os.chdir(BASE_DIR)
    configs = sorted((DATA_DIR / "configs").glob("*.ini"))
    if not configs:
        print(f"No configs found in {DATA_DIR / 'configs'}")
        return 1

    print("=" * 50)
    print("Pinning experiment baselines")
    print("=" * 50)
    failures = 0
    for path in configs:
        failures += int(run_config(path) != 0)

    print("=" * 50)
    pinned = sorted(BASELINE_DIR.glob("*.json"))
    print(f"Baselines in {BASELINE_DIR}: {len(pinned)}")
    for path in pinned:
        print(f"  {path.name}")
    print(f"Done: {len(configs)} configs, {failures} with non-zero status")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
