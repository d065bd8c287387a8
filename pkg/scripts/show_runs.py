#!/usr/bin/env python3
"""Print the newest entries of the run ledger."""
import argparse
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from morrey_lab.database import init_db, recent_runs


def main():
    parser = argparse.ArgumentParser(description="Show recent morrey-lab runs")
    parser.add_argument("--task", help="Only runs of this task")
    parser.add_argument("--limit", type=int, default=20)
    args = parser.parse_args()

    init_db()
    runs = recent_runs(task=args.task, limit=args.limit)
    if not runs:
        print("No runs logged yet.")
        return 0

    print(f"{'run_id':<22}{'task':<12}{'seed':>21}  {'status':<10}{'headline':>14}  created")
    for run in runs:
        headline = "-" if run.headline is None else f"{run.headline:.6g}"
        print(f"{run.run_id:<22}{run.task:<12}{run.seed:>21}  {run.status:<10}"
              f"{headline:>14}  {run.created_at:%Y-%m-%d %H:%M}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
