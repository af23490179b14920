#!/usr/bin/env python3
"""Desk-scale demo: full benchmark matrix over the built-in mock corpus.

Installs the mock targets into the output directory, runs every
augmenter x extractor combination for the requested number of trials
under an execution-count budget, then renders the report.  Everything is
deterministic for a fixed --rng.

    python3 scripts/run_mock_bench.py --out /tmp/mockbench
"""

import argparse
import sys
from pathlib import Path

from rcab import bench, mocks, report
from rcab.augment import Budget


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("mockbench"))
    parser.add_argument("--mocks", nargs="+", default=sorted(mocks.MOCKS))
    parser.add_argument("--budget", type=int, default=2400, help="executions per campaign")
    parser.add_argument("--scale", type=int, default=10, help="executions per schedule minute")
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--rng", type=int, default=1234)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    manifests = mocks.install(args.out / "targets", names=args.mocks)
    experiment = bench.plan(
        {
            "targets": [str(m) for m in manifests.values()],
            "augmenters": ["aflcem", "concfuzz"],
            "extractors": ["vulnloc", "aurora"],
            "budget": Budget(execs=args.budget),
            "schedule_scale": args.scale,
            "base_rng": args.rng,
            "trials": args.trials,
            "workers": args.workers,
            "out_dir": args.out,
        }
    )
    print(
        f"{experiment.campaign_count()} campaigns, "
        f"{experiment.pairing_count() * len(experiment.schedule())} snapshot evaluations"
    )
    rows = bench.run_plan(experiment)
    results_csv = args.out / "results.csv"
    if results_csv.exists():
        results_csv.unlink()
    bench.write_results(rows, results_csv)

    report_dir = args.out / "report"
    report.emit_plots(report.read_results(results_csv), report_dir, scale=args.scale)
    print(f"results: {results_csv}")
    print(f"report:  {report_dir}")
    print()
    print((report_dir / "table2.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
