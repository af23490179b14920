"""Helpers shared by the feature extractors.

Extraction is a pure function of a dataset snapshot.  Identical traces
are grouped first: scores depend only on trace content and class counts,
and augmentation campaigns on small targets repeat paths massively, so
grouping turns per-sample work into per-unique-trace work.
"""

from __future__ import annotations

from dataclasses import dataclass

from rcab.model import Dataset, DegenerateDatasetError, Location, Ranking, Trace, VerdictKind


@dataclass(frozen=True)
class TraceGroup:
    trace: Trace
    n_crash: int
    n_noncrash: int


def group_by_trace(dataset: Dataset) -> tuple[list[TraceGroup], int, int]:
    """Countable samples grouped by identical trace, plus class totals.

    Raises DegenerateDatasetError when either class is empty: a dataset
    in which every run crashed (or none did) carries no contrast and must
    be reported as an augmentation failure, never scored.
    """
    crash: dict[Trace, int] = {}
    noncrash: dict[Trace, int] = {}
    for sample in dataset.samples:
        if sample.verdict.kind is VerdictKind.CRASH:
            crash[sample.trace] = crash.get(sample.trace, 0) + 1
        elif sample.verdict.kind is VerdictKind.NONCRASH:
            noncrash[sample.trace] = noncrash.get(sample.trace, 0) + 1
    n_crash = sum(crash.values())
    n_noncrash = sum(noncrash.values())
    if n_crash == 0 or n_noncrash == 0:
        raise DegenerateDatasetError(
            f"dataset needs both classes: {n_crash} crashing / "
            f"{n_noncrash} non-crashing countable samples"
        )
    groups = []
    for trace in {**crash, **noncrash}:
        groups.append(
            TraceGroup(trace, crash.get(trace, 0), noncrash.get(trace, 0))
        )
    return groups, n_crash, n_noncrash


def build_ranking(scores: dict[Location, float], cap: int) -> Ranking:
    """Descending by score, ties broken by (file, line), truncated to cap."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return Ranking(entries=tuple(ordered[:cap]), cap=cap)
