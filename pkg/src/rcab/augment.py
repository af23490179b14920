"""Shared augmentation machinery: budgets, the campaign clock, the
recording executor and campaign-level errors.

Budgets come in two flavors.  Wall-time budgets are what benchmarking
uses; execution-count budgets make campaigns bit-reproducible and are
what the tests use, since wall time is not deterministic.  The campaign
clock derives each sample's born_at stamp from the active flavor
(elapsed milliseconds vs. execution ordinal), so snapshots slice the
dataset identically either way.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

from rcab.harness import Harness, TargetSpec
from rcab.model import Dataset, Sample, Trace


class SeedNotCrashingError(Exception):
    """The initial seed must crash the target; augmentation explores the
    neighborhood of a crash and has nothing to explore otherwise."""


class BudgetZeroError(Exception):
    pass


_DURATION_UNITS = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000}


@dataclass(frozen=True)
class Budget:
    """Either `execs` executions or `wall_ms` milliseconds; exactly one."""

    execs: int | None = None
    wall_ms: int | None = None

    def __post_init__(self):
        if (self.execs is None) == (self.wall_ms is None):
            raise ValueError("Budget needs exactly one of execs or wall_ms")
        amount = self.execs if self.execs is not None else self.wall_ms
        if amount <= 0:
            raise BudgetZeroError(f"budget must be positive, got {amount}")

    @property
    def amount(self) -> int:
        return self.execs if self.execs is not None else self.wall_ms

    @property
    def is_exec_count(self) -> bool:
        return self.execs is not None

    @classmethod
    def parse(cls, text: str) -> "Budget":
        """Parse '2000execs' or a duration like '500ms', '90s', '5m', '4h'."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)\s*execs?", text)
        if m:
            return cls(execs=int(m.group(1)))
        m = re.fullmatch(r"(\d+)\s*(ms|s|m|h)", text)
        if m:
            return cls(wall_ms=int(m.group(1)) * _DURATION_UNITS[m.group(2)])
        raise ValueError(f"cannot parse budget {text!r} (want e.g. 2000execs or 4h)")


class CampaignClock:
    """Tracks budget consumption and stamps born_at values."""

    def __init__(self, budget: Budget):
        self.budget = budget
        self.execs = 0
        self._t0 = time.monotonic()

    def now(self) -> int:
        if self.budget.is_exec_count:
            return self.execs
        return int((time.monotonic() - self._t0) * 1000)

    def exhausted(self) -> bool:
        if self.budget.is_exec_count:
            return self.execs >= self.budget.execs
        return self.now() >= self.budget.wall_ms

    def charge(self) -> int:
        """Account for one execution; returns its born_at stamp."""
        self.execs += 1
        return self.now()


class RecordingExecutor:
    """Runs the target, stamps the sample and appends it to the sink.

    Traces are interned by content: repeated paths share one Trace object,
    which keeps long campaigns on small targets memory-flat.
    """

    def __init__(self, spec: TargetSpec, clock: CampaignClock, sink: Dataset):
        self.harness = Harness(spec)
        self.clock = clock
        self.sink = sink
        self._trace_cache: dict[Trace, Trace] = {}

    def run(self, input_bytes: bytes) -> Sample:
        born_at = self.clock.charge()
        sample = self.harness.run(input_bytes, born_at=born_at)
        cached = self._trace_cache.setdefault(sample.trace, sample.trace)
        if cached is not sample.trace:
            sample = Sample(
                input=sample.input,
                trace=cached,
                verdict=sample.verdict,
                born_at=sample.born_at,
            )
        self.sink.append(sample)
        return sample


def start_campaign(
    spec: TargetSpec,
    seed: bytes,
    budget: Budget,
    rng_seed: int,
    sink: Dataset | None,
    augmenter_id: str,
) -> tuple[Dataset, RecordingExecutor, Sample]:
    """Common campaign preamble: validate the budget, execute the seed as
    the first recorded sample and fail unless it crashes."""
    if sink is None:
        sink = Dataset(target_id=spec.id, rng_seed=rng_seed, augmenter_id=augmenter_id)
    clock = CampaignClock(budget)
    executor = RecordingExecutor(spec, clock, sink)
    seed_sample = executor.run(seed)
    if not seed_sample.verdict.is_crash:
        raise SeedNotCrashingError(
            f"seed does not crash {spec.id}: verdict {seed_sample.verdict.kind.value}"
        )
    return sink, executor, seed_sample
