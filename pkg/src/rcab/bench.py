"""Experiment orchestration: plan and execute the full augmenter x
extractor x target x seed x trial matrix with snapshot-scheduled
extraction, per-trial rng seeding and budget enforcement.

Each campaign runs its augmenter to budget exhaustion, then every
scheduled snapshot (the sample prefix with born_at <= t) is handed to
every configured extractor.  Snapshot isolation is structural: datasets
are append-only and snapshots are frozen prefix copies, so later
augmentation can never leak into an earlier snapshot, and extraction
cost is never charged against the augmentation budget.  A failed
campaign or extraction yields NODATA rows; the rest of the matrix always
continues, and every planned coordinate appears exactly once.

Determinism contract: with an execution-count budget and a fixed
base_rng the emitted results.csv is byte-identical across runs (trial k
always fuzzes with rng seed base_rng + k, rows are emitted in plan
order, and the volatile wall_ms column is suppressed to 0 in this mode;
wall-time budgets record real extraction milliseconds instead).
"""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from rcab import aflcem, concfuzz, vulnloc, aurora
from rcab.augment import Budget
from rcab.harness import load_manifest, parse_kv_sections
from rcab.model import (
    Dataset,
    DegenerateDatasetError,
    dataset_balance,
    rank_of_ground_truth,
    snapshot_schedule,
)

log = logging.getLogger(__name__)

ABSENT = "ABSENT"
NODATA = "NODATA"

AUGMENTERS = ("aflcem", "concfuzz")
EXTRACTORS = ("vulnloc", "aurora")

RESULT_FIELDS = (
    "target",
    "augmenter",
    "extractor",
    "seed_id",
    "trial",
    "snapshot",
    "rank",
    "n_crash",
    "n_noncrash",
    "wall_ms",
)

_CONFIG_SECTIONS = ("targets", "augmenters", "extractors")


class PlanError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    targets: tuple[Path, ...]
    augmenters: tuple[str, ...]
    extractors: tuple[str, ...]
    budget: Budget
    schedule_scale: float
    base_rng: int = 0
    trials: int = 5
    seed_indices: tuple[int, ...] | None = None  # None means every registered seed
    cap: int = 200
    probes_per_byte: int = 8
    workers: int = 1
    out_dir: Path = Path("bench_out")
    extraction_cap_ms: int = 300_000

    def schedule(self) -> list:
        return snapshot_schedule(self.budget.amount, self.schedule_scale)

    def campaign_count(self) -> int:
        return len(self._seed_table()) * len(self.augmenters) * self.trials

    def pairing_count(self) -> int:
        return self.campaign_count() * len(self.extractors)

    def _seed_table(self) -> list[tuple[Path, Path]]:
        """(manifest, seed path) pairs across all targets, in plan order."""
        table = []
        for manifest in self.targets:
            spec = load_manifest(manifest)
            indices = (
                range(len(spec.seeds))
                if self.seed_indices is None
                else self.seed_indices
            )
            for i in indices:
                if not 0 <= i < len(spec.seeds):
                    raise PlanError(
                        f"{spec.id}: seed index {i} out of range "
                        f"(target has {len(spec.seeds)} seeds)"
                    )
                table.append((manifest, spec.seeds[i]))
        return table


@dataclass(frozen=True)
class SnapshotResult:
    target: str
    augmenter: str
    extractor: str
    seed_id: str
    trial: int
    snapshot: float
    rank: int | str  # 1-based rank, or ABSENT / NODATA
    n_crash: int
    n_noncrash: int
    wall_ms: int


@dataclass(frozen=True)
class CampaignJob:
    """Everything one worker needs; file paths only, so it pickles."""

    target_manifest: str
    augmenter: str
    seed_path: str
    seed_id: str
    trial: int
    rng_seed: int
    budget: Budget
    schedule_scale: float
    extractors: tuple[str, ...]
    cap: int
    probes_per_byte: int
    extraction_cap_ms: int


def seed_id_for(path: Path) -> str:
    """Stable seed identifier carrying the byte length (seed size is an
    analysis axis, so it travels with the results)."""
    path = Path(path)
    return f"{path.stem}_{path.stat().st_size}B"


def plan(config: dict) -> ExperimentPlan:
    """Validate a configuration mapping into an ExperimentPlan."""
    targets = tuple(Path(t) for t in config.get("targets", ()))
    if not targets:
        raise PlanError("no targets configured")
    augmenters = tuple(config.get("augmenters", ()))
    extractors = tuple(config.get("extractors", ()))
    if not augmenters:
        raise PlanError("no augmenters configured")
    if not extractors:
        raise PlanError("no extractors configured")
    for a in augmenters:
        if a not in AUGMENTERS:
            raise PlanError(f"unknown augmenter {a!r} (known: {AUGMENTERS})")
    for e in extractors:
        if e not in EXTRACTORS:
            raise PlanError(f"unknown extractor {e!r} (known: {EXTRACTORS})")
    budget = config["budget"]
    if not isinstance(budget, Budget):
        budget = Budget.parse(str(budget))
    default_scale = 1 if budget.is_exec_count else 60_000
    trials = int(config.get("trials", 5))
    if trials < 1:
        raise PlanError("trials must be >= 1")
    seed_indices = config.get("seeds")
    if seed_indices is not None:
        seed_indices = tuple(int(i) for i in seed_indices)
    experiment = ExperimentPlan(
        targets=targets,
        augmenters=augmenters,
        extractors=extractors,
        budget=budget,
        schedule_scale=float(config.get("schedule_scale", default_scale)),
        base_rng=int(config.get("base_rng", 0)),
        trials=trials,
        seed_indices=seed_indices,
        cap=int(config.get("cap", 200)),
        probes_per_byte=int(config.get("probes_per_byte", 8)),
        workers=int(config.get("workers", max(1, (os.cpu_count() or 2) - 1))),
        out_dir=Path(config.get("out_dir", "bench_out")),
        extraction_cap_ms=int(config.get("extraction_cap_ms", 300_000)),
    )
    for manifest in experiment.targets:
        load_manifest(manifest)  # fail fast on bad targets
    experiment._seed_table()
    return experiment


def load_config(path) -> ExperimentPlan:
    """Read the plain-text bench configuration (scalar `key value` lines
    plus `targets:` / `augmenters:` / `extractors:` sections; paths are
    relative to the config file)."""
    path = Path(path)
    scalars, sections = parse_kv_sections(path, _CONFIG_SECTIONS)
    config: dict = {k: v for k, (v, _) in scalars.items()}
    if "seeds" in config:
        config["seeds"] = config["seeds"].split()
    base = path.parent
    config["targets"] = [str((base / line).resolve()) for _, line in sections.get("targets", [])]
    config["augmenters"] = [line for _, line in sections.get("augmenters", [])]
    config["extractors"] = [line for _, line in sections.get("extractors", [])]
    if "out_dir" in config:
        config["out_dir"] = (base / config["out_dir"]).resolve()
    return plan(config)


def campaigns(experiment: ExperimentPlan) -> list[CampaignJob]:
    """The campaign matrix in deterministic plan order.  Trial k always
    fuzzes with rng seed base_rng + k so cross-trial variance is
    attributable to fuzzing randomness alone."""
    jobs = []
    for manifest, seed_path in experiment._seed_table():
        for augmenter in experiment.augmenters:
            for trial in range(experiment.trials):
                jobs.append(
                    CampaignJob(
                        target_manifest=str(manifest),
                        augmenter=augmenter,
                        seed_path=str(seed_path),
                        seed_id=seed_id_for(seed_path),
                        trial=trial,
                        rng_seed=experiment.base_rng + trial,
                        budget=experiment.budget,
                        schedule_scale=experiment.schedule_scale,
                        extractors=experiment.extractors,
                        cap=experiment.cap,
                        probes_per_byte=experiment.probes_per_byte,
                        extraction_cap_ms=experiment.extraction_cap_ms,
                    )
                )
    return jobs


def _run_augmenter(job: CampaignJob, spec, seed_bytes: bytes) -> Dataset:
    if job.augmenter == "aflcem":
        return aflcem.run(spec, seed_bytes, job.budget, job.rng_seed)
    return concfuzz.run(
        spec,
        seed_bytes,
        job.budget,
        job.rng_seed,
        probes_per_byte=job.probes_per_byte,
    )


def _extract_rank(extractor: str, snapshot: Dataset, spec, cap: int):
    ranking = (vulnloc if extractor == "vulnloc" else aurora).rank(snapshot, spec, cap)
    return rank_of_ground_truth(ranking, spec.ground_truth)


def run_campaign(job: CampaignJob) -> list[SnapshotResult]:
    """One augmentation campaign plus all snapshot extractions.

    Failures never abort the matrix: a campaign-level harness problem
    yields NODATA for every planned coordinate of this campaign, an
    extraction failure yields NODATA for that cell only.
    """
    spec = load_manifest(job.target_manifest)
    schedule = snapshot_schedule(job.budget.amount, job.schedule_scale)
    deterministic = job.budget.is_exec_count

    def row(t, extractor, rank, n_crash=0, n_noncrash=0, wall_ms=0):
        return SnapshotResult(
            target=spec.id,
            augmenter=job.augmenter,
            extractor=extractor,
            seed_id=job.seed_id,
            trial=job.trial,
            snapshot=t,
            rank=rank,
            n_crash=n_crash,
            n_noncrash=n_noncrash,
            wall_ms=wall_ms,
        )

    try:
        seed_bytes = Path(job.seed_path).read_bytes()
        sink = _run_augmenter(job, spec, seed_bytes)
    except Exception as e:
        log.warning(
            "campaign failed (%s x %s, seed %s, trial %d): %s",
            spec.id,
            job.augmenter,
            job.seed_id,
            job.trial,
            e,
        )
        return [row(t, ext, NODATA) for t in schedule for ext in job.extractors]

    rows = []
    for t in schedule:
        snapshot = sink.snapshot(t)
        n_crash, n_noncrash, _ = dataset_balance(snapshot)
        for extractor in job.extractors:
            started = time.perf_counter()
            try:
                rank = _extract_rank(extractor, snapshot, spec, job.cap)
                rank_token = ABSENT if rank is None else rank
            except (DegenerateDatasetError, MemoryError) as e:
                log.info(
                    "%s on %s@%s trial %d: no data (%s)",
                    extractor,
                    spec.id,
                    t,
                    job.trial,
                    e,
                )
                rank_token = NODATA
            elapsed_ms = int((time.perf_counter() - started) * 1000)
            if elapsed_ms > job.extraction_cap_ms:
                # resource blowout: report the cell as unobtainable
                rank_token = NODATA
            rows.append(
                row(
                    t,
                    extractor,
                    rank_token,
                    n_crash,
                    n_noncrash,
                    0 if deterministic else elapsed_ms,
                )
            )
    return rows


def run_plan(experiment: ExperimentPlan) -> list[SnapshotResult]:
    """Execute every campaign; rows come back in deterministic plan order
    regardless of worker scheduling."""
    jobs = campaigns(experiment)
    log.info(
        "running %d campaigns (%d snapshot evaluations)",
        len(jobs),
        experiment.pairing_count() * len(experiment.schedule()),
    )
    if experiment.workers <= 1:
        per_campaign = [run_campaign(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=experiment.workers) as pool:
            per_campaign = list(pool.map(run_campaign, jobs))
    return [r for rows in per_campaign for r in rows]


def _format_snapshot(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(t)


def write_results(rows, path) -> None:
    """Append rows to results.csv, creating it (with header) on first use."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(RESULT_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r.target,
                    r.augmenter,
                    r.extractor,
                    r.seed_id,
                    r.trial,
                    _format_snapshot(r.snapshot),
                    r.rank,
                    r.n_crash,
                    r.n_noncrash,
                    r.wall_ms,
                ]
            )
