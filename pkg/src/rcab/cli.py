"""Command line interface.

Subcommands mirror the pipeline stages:

    rcab exec     --target <manifest> --input <file>
    rcab augment  --method aflcem|concfuzz --target <manifest> --seed <file>
                  --budget <dur|Nexecs> --rng <u64> --out <dir>
    rcab extract  --method vulnloc|aurora --dataset <dir> --target <manifest>
                  --cap 200 --out ranking.csv
    rcab bench    --config <file>
    rcab report   --results results.csv --out report/
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from rcab import __version__, aflcem, aurora, bench, concfuzz, report, store, vulnloc
from rcab.augment import Budget, BudgetZeroError, SeedNotCrashingError
from rcab.harness import Harness, ManifestError, ManifestValidationError, load_manifest
from rcab.model import (
    DegenerateDatasetError,
    dataset_balance,
    rank_of_ground_truth,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (
        ManifestError,
        ManifestValidationError,
        SeedNotCrashingError,
        BudgetZeroError,
        DegenerateDatasetError,
        bench.PlanError,
        FileNotFoundError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcab",
        description="benchmarking platform for crash root cause analysis",
    )
    parser.add_argument("--version", action="version", version=f"rcab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exec", help="run a target once and print the verdict")
    p.add_argument("--target", required=True, help="target manifest path")
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--timeout-ms", type=int, default=None)
    p.add_argument("--trace-out", default=None, help="also write the parsed trace here")
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("augment", help="run one augmentation campaign")
    p.add_argument("--method", required=True, choices=bench.AUGMENTERS)
    p.add_argument("--target", required=True)
    p.add_argument("--seed", required=True, help="crashing seed file")
    p.add_argument("--budget", required=True, help="e.g. 2000execs, 15m, 4h")
    p.add_argument("--rng", type=int, required=True, help="rng seed (u64)")
    p.add_argument("--out", required=True, help="dataset output directory")
    p.add_argument("--probes-per-byte", type=int, default=concfuzz.DEFAULT_PROBES_PER_BYTE)
    p.add_argument("--energy", type=int, default=aflcem.DEFAULT_ENERGY)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract", help="rank root-cause locations for a dataset")
    p.add_argument("--method", required=True, choices=bench.EXTRACTORS)
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--target", required=True)
    p.add_argument("--cap", type=int, default=vulnloc.DEFAULT_CAP)
    p.add_argument("--out", required=True, help="ranking CSV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bench", help="run a full experiment plan")
    p.add_argument("--config", required=True, help="bench configuration file")
    p.add_argument("--results", default=None, help="results CSV (default: <out_dir>/results.csv)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="build tables and figures from results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--scale", type=float, default=1.0, help="schedule scale used by the bench")
    p.add_argument(
        "--snapshots",
        type=float,
        nargs="+",
        default=None,
        help="headline reporting points in schedule minutes (default: 15 120 240)",
    )
    p.set_defaults(func=cmd_report)
    return parser


def cmd_exec(args) -> int:
    spec = load_manifest(args.target)
    if args.timeout_ms is not None:
        from dataclasses import replace

        spec = replace(spec, timeout_ms=args.timeout_ms)
    sample = Harness(spec).run(Path(args.input).read_bytes())
    v = sample.verdict
    detail = []
    if v.signal is not None:
        detail.append(f"signal={v.signal}")
    if v.exit_code is not None:
        detail.append(f"exit={v.exit_code}")
    blocks = ",".join(map(str, sample.trace.block_ids()))
    print(f"verdict={v.kind.value} {' '.join(detail)} blocks=[{blocks}]".rstrip())
    if args.trace_out:
        Path(args.trace_out).write_text(store.format_trace(sample.trace))
    return 0


def cmd_augment(args) -> int:
    spec = load_manifest(args.target)
    seed = Path(args.seed).read_bytes()
    budget = Budget.parse(args.budget)
    if args.method == "aflcem":
        dataset = aflcem.run(spec, seed, budget, args.rng, energy=args.energy)
    else:
        dataset = concfuzz.run(
            spec, seed, budget, args.rng, probes_per_byte=args.probes_per_byte
        )
    # Campaign is over; persisting internal state is not augmentation time.
    store.save_dataset(dataset, Path(args.out))
    n_crash, n_noncrash, ratio = dataset_balance(dataset)
    print(
        f"dataset {args.out}: {len(dataset)} samples "
        f"({n_crash} crashing, {n_noncrash} non-crashing, ratio {ratio:.3f})"
    )
    return 0


def cmd_extract(args) -> int:
    spec = load_manifest(args.target)
    dataset = store.load_dataset(Path(args.dataset))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.method == "vulnloc":
        ranking = vulnloc.rank(dataset, spec, cap=args.cap)
    else:
        scores = aurora.score_all(dataset, spec)
        ranking = aurora.rank_locations(scores, cap=args.cap)
        _write_predicates(out.parent / "predicates.csv", scores)
    with open(out, "w", newline="") as fh:
        fh.write("rank,score,file,line\n")
        for pos, (loc, score) in enumerate(ranking.entries, start=1):
            fh.write(f"{pos},{score:.12g},{loc.file},{loc.line}\n")
    gt_rank = rank_of_ground_truth(ranking, spec.ground_truth)
    print(f"wrote {out}; ground-truth rank: {bench.ABSENT if gt_rank is None else gt_rank}")
    return 0


def _write_predicates(path: Path, scores) -> None:
    ordered = sorted(
        scores,
        key=lambda ps: (
            -ps.score,
            ps.predicate.site.location,
            ps.predicate.form.value,
            ps.predicate.threshold if ps.predicate.threshold is not None else 0,
        ),
    )
    with open(path, "w", newline="") as fh:
        fh.write("score,file,line,form,threshold\n")
        for ps in ordered:
            loc = ps.predicate.site.location
            threshold = "" if ps.predicate.threshold is None else ps.predicate.threshold
            form = ps.predicate.form.value
            if ps.predicate.polarity == "negated":
                form = f"not_{form}"
            fh.write(f"{ps.score:.12g},{loc.file},{loc.line},{form},{threshold}\n")


def cmd_bench(args) -> int:
    experiment = bench.load_config(args.config)
    rows = bench.run_plan(experiment)
    results_path = (
        Path(args.results) if args.results else experiment.out_dir / "results.csv"
    )
    bench.write_results(rows, results_path)
    print(f"wrote {len(rows)} snapshot results to {results_path}")
    return 0


def cmd_report(args) -> int:
    rows = report.read_results(Path(args.results))
    written = report.emit_plots(
        rows, Path(args.out), scale=args.scale, snapshot_subset=args.snapshots
    )
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
