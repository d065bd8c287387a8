"""Command-line entry point for morrey-lab experiments."""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from morrey_lab.config import LOG_LEVEL
from morrey_lab.exceptions import (
    ConfigError, LatticeOverflowError, MemoryGuardError, MorreyLabError, ParameterDomainError,
    SequenceFormatError, UndefinedRatioError
)
from morrey_lab.schemas import ExperimentConfig, RunSummary
from morrey_lab.services.experiment_runner import experiment_runner, load_config, parse_config

# Configure logging
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

TASKS = ["norm", "maximal", "riesz", "fs-check", "sandwich", "verify-all", "gen"]

# CLI flag -> (config section, key)
OVERRIDES = {
    "seed": ("experiment", "seed"),
    "threads": ("experiment", "threads"),
    "input": ("experiment", "input"),
    "p": ("parameters", "p"),
    "q": ("parameters", "q"),
    "alpha": ("parameters", "alpha"),
    "variant": ("parameters", "variant"),
    "margin": ("parameters", "margin"),
    "trials": ("parameters", "trials"),
    "radii": ("parameters", "radii"),
    "phi_mode": ("parameters", "phi_mode"),
    "adversarial_steps": ("parameters", "adversarial_steps"),
    "constant_k": ("parameters", "constant_k"),
    "kind": ("generator", "kind"),
    "dim": ("generator", "dim"),
    "radius": ("generator", "radius"),
    "count": ("generator", "count"),
    "offset": ("generator", "offset"),
    "beta": ("generator", "beta"),
    "out": ("output", "out_dir"),
    "baseline": ("output", "baseline"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--baseline", help="Baseline JSON (pinned on first run)")
    common.add_argument("--threads", type=int, help="Worker threads")
    common.add_argument("--no-timestamp", action="store_true", help="Omit the CSV timestamp line")
    common.add_argument("--no-ledger", action="store_true", help="Do not log the run to the ledger")
    common.add_argument("--input", help="Sequence file instead of the generator")
    common.add_argument("--p", type=float, help="Exponent p")
    common.add_argument("--q", type=float, help="Exponent q")
    common.add_argument("--alpha", type=float, help="Riesz order alpha")
    common.add_argument("--variant", choices=["odd", "even", "uncentered"])
    common.add_argument("--margin", type=int, help="Window margin L")
    common.add_argument("--trials", type=int, help="Ensemble size")
    common.add_argument("--radii", type=lambda s: [float(r) for r in s.split(",")],
                        help="Comma-separated split radii")
    common.add_argument("--phi-mode", dest="phi_mode",
                        choices=["independent", "same", "cube-weight"])
    common.add_argument("--adversarial-steps", dest="adversarial_steps", type=int)
    common.add_argument("--constant-k", dest="constant_k", type=float)
    common.add_argument("--grid", action="store_true",
                        help="fs-check: run every (d, p, variant) cell")
    common.add_argument("--kind", choices=["spike", "multi-spike", "cube-indicator",
                                           "uniform-random-box", "power-decay-truncated"])
    common.add_argument("--dim", type=int, help="Lattice dimension d")
    common.add_argument("--radius", type=int, help="Generator radius")
    common.add_argument("--count", type=int, help="Spike count")
    common.add_argument("--offset", type=int, help="Random center offset")
    common.add_argument("--beta", type=float, help="Power-decay exponent")

    parser = argparse.ArgumentParser(
        prog="morrey-lab",
        description="Exact computations and inequality checks on discrete Morrey spaces"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        sub.add_parser(task, parents=[common], help=f"Run the {task} task")
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) overlaid with CLI flags; the subcommand sets the task."""
    if args.config:
        raw: Dict[str, Any] = load_config(args.config).model_dump(mode="json", exclude_unset=True)
    else:
        raw = {}
    raw.setdefault("experiment", {})["task"] = args.command
    for flag, (section, key) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw.setdefault(section, {})[key] = value
    if args.no_timestamp:
        raw.setdefault("output", {})["timestamp"] = False
    if args.no_ledger:
        raw.setdefault("output", {})["ledger"] = False
    if args.grid:
        raw.setdefault("parameters", {})["grid"] = True
    return parse_config(raw, source=args.config or "<arguments>")


def print_summary(summary: RunSummary):
    """Short human-readable report on stdout."""
    if summary.task == "verify-all":
        print(f"{'group':<22}{'result':<8}{'checked':>9}{'violations':>12}{'seconds':>10}")
        for group in summary.results.get("groups", []):
            result = "PASS" if group["passed"] else "FAIL"
            print(f"{group['name']:<22}{result:<8}{group['checked']:>9}"
                  f"{group['violations']:>12}{group['seconds']:>10.3f}")
    else:
        print(f"{summary.task}: {summary.results.get('headline')}")
    if summary.baseline is not None:
        state = "pinned" if summary.baseline.pinned_now else ("ok" if summary.baseline.ok else "DRIFT")
        print(f"baseline {summary.baseline.path}: {state}")
    print(f"status: {summary.status} ({summary.run_id})")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        summary = experiment_runner.run(config)
    except (ParameterDomainError, ConfigError, SequenceFormatError, UndefinedRatioError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except (MemoryGuardError, LatticeOverflowError) as e:
        logger.error(f"Resource error: {e}")
        return EXIT_RESOURCE
    except MorreyLabError as e:
        logger.error(f"Error: {e}")
        return EXIT_USAGE

    print_summary(summary)
    if summary.exit_code != EXIT_OK:
        logger.error(f"Run {summary.run_id} finished with status {summary.status}")
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
