"""Turn results.csv into report artifacts: the rank-over-time table,
accuracy/balance/seed/variance plot data and rendered SVG figures.

Cell conventions follow the results they summarize: an integer is the
rank of the best ground-truth hit (lower is better), "--" means the
ground truth never appeared among the reported candidates, "N/A" means
no data could be obtained.  Headline cells take the median across trials
(absent outcomes sort as +infinity, the lower median keeps cells
integral); raw per-trial values are always emitted alongside in the
figure CSVs, which reuse the ABSENT/NODATA tokens of results.csv.

Everything here is a pure function of the results file: re-running on
the same input reproduces every CSV byte for byte.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from rcab.bench import ABSENT, NODATA, RESULT_FIELDS

log = logging.getLogger(__name__)

#: Headline reporting points, in schedule minutes (multiplied by the
#: schedule scale at use time): 15 minutes, 2 hours, 4 hours.
DEFAULT_REPORT_POINTS = (15, 120, 240)


@dataclass(frozen=True)
class ResultRow:
    target: str
    augmenter: str
    extractor: str
    seed_id: str
    trial: int
    snapshot: float
    rank: float | None  # rank, math.inf for ABSENT, None for NODATA
    n_crash: int
    n_noncrash: int
    wall_ms: int

    @property
    def technique(self) -> str:
        return f"{self.augmenter} x {self.extractor}"


def _parse_rank(token: str) -> float | None:
    if token == NODATA:
        return None
    if token == ABSENT:
        return math.inf
    return int(token)


def _rank_token(value: float | None) -> str:
    if value is None:
        return NODATA
    if value == math.inf:
        return ABSENT
    return str(int(value))


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    rows: list[ResultRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_FIELDS:
            raise ValueError(
                f"{path}: expected header {','.join(RESULT_FIELDS)}, "
                f"got {reader.fieldnames}"
            )
        for rec in reader:
            rows.append(
                ResultRow(
                    target=rec["target"],
                    augmenter=rec["augmenter"],
                    extractor=rec["extractor"],
                    seed_id=rec["seed_id"],
                    trial=int(rec["trial"]),
                    snapshot=float(rec["snapshot"]),
                    rank=_parse_rank(rec["rank"]),
                    n_crash=int(rec["n_crash"]),
                    n_noncrash=int(rec["n_noncrash"]),
                    wall_ms=int(rec["wall_ms"]),
                )
            )
    if not rows:
        raise ValueError(f"{path}: no result rows")
    return rows


def techniques_of(rows) -> list[str]:
    return sorted({r.technique for r in rows})


def _pool(values: list[float | None]) -> float | None:
    """Median of the usable values; None when nothing was obtained.
    Lower median, so a cell is always one of the measured outcomes."""
    usable = sorted(v for v in values if v is not None)
    if not usable:
        return None
    return usable[(len(usable) - 1) // 2]


def _cell_symbol(value: float | None) -> str:
    if value is None:
        return "N/A"
    if value == math.inf:
        return "--"
    return str(int(value))


@dataclass(frozen=True)
class RankTable:
    techniques: tuple[str, ...]
    rows: tuple[tuple[str, float, tuple[str, ...]], ...]  # (target, snapshot, cells)


def rank_table(rows: list[ResultRow], snapshot_subset=None, scale: float = 1) -> RankTable:
    """Median rank per (target, reporting point) x technique.

    The subset defaults to 15 schedule-minutes, 2 hours and 4 hours
    (scaled), restricted to snapshots actually present per target.
    """
    points = tuple(
        p * scale for p in (snapshot_subset or DEFAULT_REPORT_POINTS)
    )
    techniques = techniques_of(rows)
    by_target: dict[str, list[ResultRow]] = {}
    for r in rows:
        by_target.setdefault(r.target, []).append(r)
    table_rows = []
    for target in sorted(by_target):
        tr = by_target[target]
        available = {r.snapshot for r in tr}
        for point in points:
            if point not in available:
                continue
            cells = []
            for tech in techniques:
                values = [
                    r.rank for r in tr if r.technique == tech and r.snapshot == point
                ]
                cells.append(_cell_symbol(_pool(values)) if values else "N/A")
            table_rows.append((target, point, tuple(cells)))
    return RankTable(techniques=tuple(techniques), rows=tuple(table_rows))


def write_rank_table(table: RankTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "snapshot", *table.techniques])
        for target, snapshot, cells in table.rows:
            writer.writerow([target, _fmt_num(snapshot), *cells])


@dataclass(frozen=True)
class VarianceBand:
    target: str
    technique: str
    seed_id: str
    snapshot: float
    min_rank: float
    median_rank: float
    max_rank: float


def variance_summary(rows: list[ResultRow]) -> list[VarianceBand]:
    """Min/median/max rank across trials per remaining coordinate.

    Absent outcomes enter as +infinity (a ceiling band in plots); cells
    where no trial produced data are skipped.  With fewer than two trials
    the bands are degenerate and a warning is logged.
    """
    trials = {r.trial for r in rows}
    if len(trials) < 2:
        log.warning(
            "variance summary over %d trial(s); bands are degenerate", len(trials)
        )
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r.rank is None:
            continue
        key = (r.target, r.technique, r.seed_id, r.snapshot)
        groups.setdefault(key, []).append(r.rank)
    bands = []
    for key in sorted(groups):
        values = sorted(groups[key])
        bands.append(
            VarianceBand(
                target=key[0],
                technique=key[1],
                seed_id=key[2],
                snapshot=key[3],
                min_rank=values[0],
                median_rank=values[(len(values) - 1) // 2],
                max_rank=values[-1],
            )
        )
    return bands


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def _inf_token(x: float) -> str:
    return ABSENT if x == math.inf else str(int(x))


def emit_plots(
    rows: list[ResultRow],
    out_dir,
    scale: float = 1,
    snapshot_subset=None,
) -> list[Path]:
    """Write table2.csv plus per-target figure CSVs and SVG images."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    table = rank_table(rows, snapshot_subset=snapshot_subset, scale=scale)
    table_path = out_dir / "table2.csv"
    write_rank_table(table, table_path)
    written.append(table_path)

    bands = variance_summary(rows)
    by_target: dict[str, list[ResultRow]] = {}
    for r in rows:
        by_target.setdefault(r.target, []).append(r)

    for target in sorted(by_target):
        tr = by_target[target]
        written += _emit_accuracy(target, tr, out_dir)
        written += _emit_balance(target, tr, out_dir)
        written += _emit_seeds(target, tr, out_dir)
        written += _emit_variance(
            target, [b for b in bands if b.target == target], out_dir
        )
    return written


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _accuracy_series(tr: list[ResultRow]):
    """One pooled point per (technique, snapshot)."""
    snapshots = sorted({r.snapshot for r in tr})
    series = {}
    for tech in techniques_of(tr):
        points = []
        for snap in snapshots:
            values = [r.rank for r in tr if r.technique == tech and r.snapshot == snap]
            points.append((snap, _pool(values)))
        series[tech] = points
    return series


def _emit_accuracy(target: str, tr, out_dir: Path) -> list[Path]:
    series = _accuracy_series(tr)
    csv_path = out_dir / f"fig_accuracy_{target}.csv"
    csv_rows = [
        (tech, _fmt_num(snap), _rank_token(value))
        for tech, points in sorted(series.items())
        for snap, value in points
    ]
    _write_csv(csv_path, ("technique", "snapshot", "rank"), csv_rows)
    svg_path = out_dir / f"fig_accuracy_{target}.svg"
    _plot_rank_series(
        {tech: points for tech, points in series.items()},
        title=f"accuracy over augmentation time: {target}",
        path=svg_path,
    )
    return [csv_path, svg_path]


def _emit_balance(target: str, tr, out_dir: Path) -> list[Path]:
    # balance is a campaign property; deduplicate the per-extractor copies
    seen = set()
    records = []
    for r in tr:
        key = (r.augmenter, r.seed_id, r.trial, r.snapshot)
        if key in seen:
            continue
        seen.add(key)
        records.append(key + (r.n_crash, r.n_noncrash))
    records.sort()
    csv_path = out_dir / f"fig_balance_{target}.csv"
    _write_csv(
        csv_path,
        ("augmenter", "seed_id", "trial", "snapshot", "n_crash", "n_noncrash"),
        [(a, s, t, _fmt_num(snap), c, n) for a, s, t, snap, c, n in records],
    )
    svg_path = out_dir / f"fig_balance_{target}.svg"
    _plot_balance(records, title=f"generated inputs over time: {target}", path=svg_path)
    return [csv_path, svg_path]


def _emit_seeds(target: str, tr, out_dir: Path) -> list[Path]:
    csv_path = out_dir / f"fig_seeds_{target}.csv"
    seeds = sorted({r.seed_id for r in tr})
    snapshots = sorted({r.snapshot for r in tr})
    csv_rows = []
    series = {}
    for tech in techniques_of(tr):
        for seed in seeds:
            points = []
            for snap in snapshots:
                values = [
                    r.rank
                    for r in tr
                    if r.technique == tech and r.seed_id == seed and r.snapshot == snap
                ]
                pooled = _pool(values) if values else None
                csv_rows.append((tech, seed, _fmt_num(snap), _rank_token(pooled)))
                points.append((snap, pooled))
            series[f"{tech} [{seed}]"] = points
    _write_csv(csv_path, ("technique", "seed_id", "snapshot", "rank"), csv_rows)
    svg_path = out_dir / f"fig_seeds_{target}.svg"
    _plot_rank_series(
        series, title=f"accuracy per initial seed: {target}", path=svg_path
    )
    return [csv_path, svg_path]


def _emit_variance(target: str, bands: list[VarianceBand], out_dir: Path) -> list[Path]:
    csv_path = out_dir / f"fig_variance_{target}.csv"
    _write_csv(
        csv_path,
        ("technique", "seed_id", "snapshot", "min_rank", "median_rank", "max_rank"),
        [
            (
                b.technique,
                b.seed_id,
                _fmt_num(b.snapshot),
                _inf_token(b.min_rank),
                _inf_token(b.median_rank),
                _inf_token(b.max_rank),
            )
            for b in bands
        ],
    )
    svg_path = out_dir / f"fig_variance_{target}.svg"
    _plot_variance(bands, title=f"rank variance across trials: {target}", path=svg_path)
    return [csv_path, svg_path]


# ---------------------------------------------------------------- plotting


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _ceiling(finite_values: list[float]) -> float:
    # Absent outcomes render as a dashed ceiling above every real rank.
    top = max([v for v in finite_values if v != math.inf], default=100)
    return max(2.0, top * 1.5)


def _plot_rank_series(series: dict, title: str, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    finite = [
        v for pts in series.values() for _, v in pts if v is not None and v != math.inf
    ]
    ceiling = _ceiling(finite)
    drew_ceiling = False
    for label in sorted(series):
        xs, ys = [], []
        for snap, value in series[label]:
            if value is None:
                continue
            xs.append(snap)
            if value == math.inf:
                ys.append(ceiling)
                drew_ceiling = True
            else:
                ys.append(value)
        if xs:
            ax.step(xs, ys, where="post", marker="o", label=label)
    if drew_ceiling:
        ax.axhline(ceiling, linestyle="--", linewidth=0.8, color="grey")
        ax.annotate(
            "not in candidates",
            xy=(0.99, ceiling),
            xycoords=("axes fraction", "data"),
            ha="right",
            va="bottom",
            fontsize=8,
            color="grey",
        )
    ax.set_yscale("log")
    ax.invert_yaxis()  # lower rank (better) plots higher
    ax.set_xlabel("augmentation time (snapshot)")
    ax.set_ylabel("rank of ground truth (log, inverted)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_balance(records, title: str, path: Path) -> None:
    plt = _pyplot()
    augmenters = sorted({r[0] for r in records})
    fig, axes = plt.subplots(
        1, max(1, len(augmenters)), figsize=(4.5 * max(1, len(augmenters)), 4), squeeze=False
    )
    for ax, augmenter in zip(axes[0], augmenters):
        snaps = sorted({r[3] for r in records if r[0] == augmenter})
        med_crash, med_noncrash = [], []
        for snap in snaps:
            crash = sorted(r[4] for r in records if r[0] == augmenter and r[3] == snap)
            noncrash = sorted(r[5] for r in records if r[0] == augmenter and r[3] == snap)
            med_crash.append(crash[(len(crash) - 1) // 2])
            med_noncrash.append(noncrash[(len(noncrash) - 1) // 2])
        ax.stackplot(
            snaps,
            med_crash,
            med_noncrash,
            labels=["crashing", "non-crashing"],
            alpha=0.7,
        )
        ax.set_title(augmenter)
        ax.set_xlabel("snapshot")
        ax.set_ylabel("inputs (median across campaigns)")
        ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_variance(bands: list[VarianceBand], title: str, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    keys = sorted({(b.technique, b.seed_id) for b in bands})
    finite = [
        v
        for b in bands
        for v in (b.min_rank, b.median_rank, b.max_rank)
        if v != math.inf
    ]
    ceiling = _ceiling(finite)

    def clamp(v: float) -> float:
        return ceiling if v == math.inf else v

    for tech, seed in keys:
        sel = sorted(
            (b for b in bands if b.technique == tech and b.seed_id == seed),
            key=lambda b: b.snapshot,
        )
        xs = [b.snapshot for b in sel]
        ax.fill_between(
            xs,
            [clamp(b.min_rank) for b in sel],
            [clamp(b.max_rank) for b in sel],
            alpha=0.2,
        )
        ax.step(
            xs,
            [clamp(b.median_rank) for b in sel],
            where="post",
            marker="o",
            label=f"{tech} [{seed}]",
        )
    ax.set_yscale("log")
    ax.invert_yaxis()
    ax.set_xlabel("augmentation time (snapshot)")
    ax.set_ylabel("rank band across trials (log, inverted)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
