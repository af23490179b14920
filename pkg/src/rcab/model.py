"""Shared domain model: locations, traces, datasets, rankings and the
rank metric, plus the snapshot schedule used for time-resolved evaluation.

Everything here is a plain value type.  All types except Dataset are
immutable after construction; Dataset is single-writer append-only and
is read by taking an immutable snapshot.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum

I64_MIN = -(2**63)
I64_MAX = 2**63 - 1


class DegenerateDatasetError(Exception):
    """Raised when extraction is attempted on a dataset whose crashing or
    non-crashing class is empty.  Signals an augmentation failure and must
    be reported by callers, never silently scored."""


@dataclass(frozen=True, order=True)
class Location:
    """A source coordinate; the unit of root-cause ground truth.

    Equality is exact (file, line) match and ordering is lexicographic,
    which is also the deterministic tie order used by rankings.
    """

    file: str
    line: int

    def __post_init__(self):
        if not self.file:
            raise ValueError("Location.file must be non-empty")
        if self.line < 1:
            raise ValueError(f"Location.line must be >= 1, got {self.line}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"

    @classmethod
    def parse(cls, text: str) -> "Location":
        """Parse '<file>:<line>'. The last colon separates the line number."""
        file, sep, line = text.rpartition(":")
        if not sep or not file:
            raise ValueError(f"not a <file>:<line> location: {text!r}")
        return cls(file, int(line))


@dataclass(frozen=True)
class BlockSite:
    """A traceable program point: a block (or value observation) id tied to
    one source location.  `conditional` marks branch sites in the block map;
    directed augmentation targets only those."""

    id: int
    location: Location
    conditional: bool = False

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"BlockSite.id must be >= 0, got {self.id}")


class VerdictKind(Enum):
    CRASH = "crash"
    NONCRASH = "noncrash"
    TIMEOUT = "timeout"
    HARNESS_ERROR = "harnesserror"


@dataclass(frozen=True)
class Verdict:
    """Terminal outcome of one target execution.

    A crash carries either the fatal signal or a designated crash exit
    code, never both; a non-crash always carries its exit code.
    """

    kind: VerdictKind
    signal: int | None = None
    exit_code: int | None = None

    def __post_init__(self):
        if self.kind is VerdictKind.CRASH:
            if (self.signal is None) == (self.exit_code is None):
                raise ValueError(
                    "Crash verdict needs exactly one of signal or exit_code"
                )
        elif self.kind is VerdictKind.NONCRASH:
            if self.exit_code is None:
                raise ValueError("NonCrash verdict needs an exit_code")

    @property
    def is_crash(self) -> bool:
        return self.kind is VerdictKind.CRASH

    @property
    def countable(self) -> bool:
        """True for the two verdict kinds that enter extraction statistics."""
        return self.kind in (VerdictKind.CRASH, VerdictKind.NONCRASH)


@dataclass(frozen=True)
class BlockHit:
    block_id: int


@dataclass(frozen=True)
class ValueRecord:
    site_id: int
    value: int

    def __post_init__(self):
        if not I64_MIN <= self.value <= I64_MAX:
            raise ValueError(f"value out of signed 64-bit range: {self.value}")


TraceEvent = BlockHit | ValueRecord


@dataclass(frozen=True)
class Trace:
    """Ordered event stream from one execution plus its terminal verdict."""

    events: tuple[TraceEvent, ...]
    terminal: Verdict

    def block_ids(self) -> tuple[int, ...]:
        return tuple(e.block_id for e in self.events if isinstance(e, BlockHit))

    def hit_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.events:
            if isinstance(e, BlockHit):
                counts[e.block_id] = counts.get(e.block_id, 0) + 1
        return counts

    def values_by_site(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for e in self.events:
            if isinstance(e, ValueRecord):
                out.setdefault(e.site_id, []).append(e.value)
        return out


@dataclass(frozen=True)
class Sample:
    """One executed input: its bytes, trace, verdict and birth time.

    born_at is measured on the campaign clock (milliseconds for wall-time
    budgets, execution ordinal for execution-count budgets) and must be
    non-decreasing within a dataset.
    """

    input: bytes
    trace: Trace
    verdict: Verdict
    born_at: int

    def __post_init__(self):
        if self.verdict != self.trace.terminal:
            raise ValueError("Sample.verdict must equal the trace terminal")
        if self.born_at < 0:
            raise ValueError("born_at must be >= 0")

    @classmethod
    def from_trace(cls, input: bytes, trace: Trace, born_at: int = 0) -> "Sample":
        return cls(input=input, trace=trace, verdict=trace.terminal, born_at=born_at)


@dataclass
class Dataset:
    """The growing crashing/non-crashing sample collection produced by one
    augmentation campaign.  Append-only; snapshots are immutable copies."""

    target_id: str
    rng_seed: int
    augmenter_id: str
    samples: list[Sample] = field(default_factory=list)

    def append(self, sample: Sample) -> None:
        if self.samples and sample.born_at < self.samples[-1].born_at:
            raise ValueError(
                f"born_at went backwards: {sample.born_at} after "
                f"{self.samples[-1].born_at}"
            )
        self.samples.append(sample)

    def snapshot(self, at: int) -> "Dataset":
        """Immutable view of the dataset as it was at campaign time `at`:
        exactly the samples with born_at <= at."""
        cut = bisect_right([s.born_at for s in self.samples], at)
        return Dataset(
            target_id=self.target_id,
            rng_seed=self.rng_seed,
            augmenter_id=self.augmenter_id,
            samples=list(self.samples[:cut]),
        )

    def countable_samples(self) -> list[Sample]:
        """Samples that enter extraction statistics.  Timeout and harness
        error samples are kept on disk for audit but never counted."""
        return [s for s in self.samples if s.verdict.countable]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class GroundTruth:
    """The registered set of root-cause locations for one target.

    Root causes are not unique: any location where a valid fix could be
    applied is a candidate, and the best-ranked member counts as the hit.
    """

    candidates: frozenset[Location]
    notes: dict[Location, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("GroundTruth.candidates must be non-empty")


@dataclass(frozen=True)
class Ranking:
    """Scored root-cause candidates in descending score order, truncated to
    a reporting cap."""

    entries: tuple[tuple[Location, float], ...]
    cap: int

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError("Ranking.cap must be >= 1")
        if len(self.entries) > self.cap:
            raise ValueError(f"{len(self.entries)} entries exceed cap {self.cap}")
        scores = [s for _, s in self.entries]
        if any(not math.isfinite(s) for s in scores):
            raise ValueError("ranking scores must be finite")
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking entries must be sorted by descending score")

    def locations(self) -> tuple[Location, ...]:
        return tuple(loc for loc, _ in self.entries)


def rank_of_ground_truth(ranking: Ranking, gt: GroundTruth) -> int | None:
    """1-based rank of the best ground-truth hit in a ranking; None if no
    candidate location appears at all.

    Tie handling is pessimistic: the hit is placed last within its tie
    group, i.e. rank = (#entries scoring strictly higher) + (#entries in
    the tie group).  This never flatters a technique through lucky tie
    order.  Lower is better; 1 is best.
    """
    best: float | None = None
    for loc, score in ranking.entries:
        if loc in gt.candidates and (best is None or score > best):
            best = score
    if best is None:
        return None
    higher = sum(1 for _, s in ranking.entries if s > best)
    tied = sum(1 for _, s in ranking.entries if s == best)
    return higher + tied


#: First snapshot points of a campaign, in schedule minutes.
SCHEDULE_HEAD = (5, 15, 30, 45)
#: After the head, snapshots repeat every this many schedule minutes.
SCHEDULE_HOURLY = 60


def snapshot_schedule(limit: int | float, scale: int | float = 1) -> list:
    """Times at which a campaign's dataset is frozen and analyzed.

    The pattern is 5/15/30/45 schedule-minutes and hourly thereafter,
    filtered to <= limit.  `scale` converts schedule minutes to campaign
    clock units (1 for real minutes; e.g. 10 when one schedule minute
    should equal 10 executions of a desk-scale run), so the 5/15/30/45 +
    hourly shape survives rescaling.  If the limit precedes the first
    point the schedule degenerates to a single snapshot at the limit.
    """
    if limit <= 0:
        raise ValueError("snapshot_schedule limit must be > 0")
    if scale <= 0:
        raise ValueError("snapshot_schedule scale must be > 0")
    points = [m * scale for m in SCHEDULE_HEAD]
    hour = SCHEDULE_HOURLY
    while hour * scale <= limit:
        points.append(hour * scale)
        hour += SCHEDULE_HOURLY
    points = [p for p in points if p <= limit]
    if not points:
        return [limit]
    return points


def dataset_balance(d: Dataset) -> tuple[int, int, float]:
    """(n_crash, n_noncrash, ratio) over countable samples only.

    ratio = n_crash / max(1, n_noncrash); the clamp keeps all-crash
    datasets finite so balance curves can always be plotted.
    """
    n_crash = 0
    n_noncrash = 0
    for s in d.samples:
        if s.verdict.kind is VerdictKind.CRASH:
            n_crash += 1
        elif s.verdict.kind is VerdictKind.NONCRASH:
            n_noncrash += 1
    return n_crash, n_noncrash, n_crash / max(1, n_noncrash)
