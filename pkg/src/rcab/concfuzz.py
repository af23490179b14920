"""Directed neighborhood augmenter ("concfuzz").

Explores executions close to the crashing path: it extracts the branch
points of the crashing trace, probes which input bytes influence each
point, then concentrates random substitutions and small arithmetic on
the influential bytes of one point at a time so runs flip that point
while earlier points stay intact where possible.  All executions,
probes included, land in the dataset.

Byte influence is established purely empirically (replace a byte, rerun,
compare branch outcomes); there is no taint tracking or symbolic
reasoning, which keeps campaigns deterministic under a fixed rng seed
and an execution-count budget.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from rcab.augment import Budget, start_campaign
from rcab.harness import Harness, TargetSpec
from rcab.model import BlockHit, BlockSite, Dataset, Trace, ValueRecord

DEFAULT_PROBES_PER_BYTE = 8
ARITH_SPAN = 16  # +-1..16 counts as "small" arithmetic


class NonCrashTraceError(Exception):
    pass


@dataclass(frozen=True)
class BranchPoint:
    """One conditional block hit along a trace, paired with the value most
    recently recorded before it (None when no value preceded it)."""

    trace_index: int
    site: BlockSite
    observed_value: int | None


@dataclass(frozen=True)
class SensitivityMap:
    """Influential input byte indices per branch point (aligned with the
    branch point list it was built from)."""

    influential: tuple[frozenset[int], ...]

    def __post_init__(self):
        for byte_set in self.influential:
            if any(i < 0 for i in byte_set):
                raise ValueError("byte indices must be >= 0")


def branch_sequence(crashing_trace: Trace, spec: TargetSpec) -> list[BranchPoint]:
    """Branch points of a crashing trace, in trace order.

    One point per block-hit event whose site is marked conditional in the
    block map.  Raises NonCrashTraceError unless the trace crashed.
    """
    if not crashing_trace.terminal.is_crash:
        raise NonCrashTraceError(
            f"trace terminal is {crashing_trace.terminal.kind.value}, not crash"
        )
    return _branch_points(crashing_trace, spec)


def _branch_points(trace: Trace, spec: TargetSpec) -> list[BranchPoint]:
    conditional = spec.conditional_ids()
    sites = spec.site_by_id()
    points = []
    last_value: int | None = None
    for idx, ev in enumerate(trace.events):
        if isinstance(ev, ValueRecord):
            last_value = ev.value
        elif isinstance(ev, BlockHit) and ev.block_id in conditional:
            points.append(BranchPoint(idx, sites[ev.block_id], last_value))
    return points


def _point_changed(probe_points: list[BranchPoint], j: int, point: BranchPoint) -> bool:
    """Did branch point j disappear or change site/value context?"""
    if j >= len(probe_points):
        return True
    other = probe_points[j]
    return other.site.id != point.site.id or other.observed_value != point.observed_value


def _probe_value(rng: random.Random, original: int) -> int:
    # uniform over 0..255 excluding the original byte value
    v = rng.randrange(255)
    return v + 1 if v >= original else v


def sensitivity_map(
    spec: TargetSpec,
    input_bytes: bytes,
    points: list[BranchPoint],
    probes_per_byte: int,
    rng: random.Random,
) -> SensitivityMap:
    """Probe each input byte in isolation: byte i is influential for a
    point iff any of its probes changes that point's presence or context.

    Standalone form used for inspection; campaigns run the same probe
    plan through their recording executor so probes count against the
    budget and enter the dataset.
    """
    harness = Harness(spec)
    sets = [set() for _ in points]
    for i, original, probe in _probe_plan(input_bytes, probes_per_byte, rng):
        sample = harness.run(probe)
        _mark_influence(spec, sample.trace, points, sets, i)
    return SensitivityMap(tuple(frozenset(s) for s in sets))


def _probe_plan(input_bytes: bytes, probes_per_byte: int, rng: random.Random):
    for i in range(len(input_bytes)):
        for _ in range(probes_per_byte):
            value = _probe_value(rng, input_bytes[i])
            probe = bytearray(input_bytes)
            probe[i] = value
            yield i, input_bytes[i], bytes(probe)


def _mark_influence(spec, trace, points, sets, byte_index) -> None:
    probe_points = _branch_points(trace, spec)
    for j, point in enumerate(points):
        if _point_changed(probe_points, j, point):
            sets[j].add(byte_index)


def run(
    spec: TargetSpec,
    seed: bytes,
    budget: Budget,
    rng_seed: int,
    sink: Dataset | None = None,
    probes_per_byte: int = DEFAULT_PROBES_PER_BYTE,
) -> Dataset:
    """Run one directed campaign until the budget is exhausted.

    Phases: record the seed (must crash), probe byte sensitivity, then
    cycle round-robin over branch points mutating each point's
    influential bytes.  The budget is split uniformly across points in
    each round (one execution per point per round), and rounds repeat
    until exhaustion.  Bytes influential for an earlier point are left
    alone when the targeted point has bytes of its own, so earlier
    branches keep their outcome where possible.
    """
    rng = random.Random(rng_seed)
    sink, executor, seed_sample = start_campaign(
        spec, seed, budget, rng_seed, sink, augmenter_id="concfuzz"
    )
    points = branch_sequence(seed_sample.trace, spec)
    sets: list[set[int]] = [set() for _ in points]
    for i, _, probe in _probe_plan(seed, probes_per_byte, rng):
        if executor.clock.exhausted():
            break
        sample = executor.run(probe)
        _mark_influence(spec, sample.trace, points, sets, i)

    # Prefer bytes no earlier point depends on; fall back to the full set.
    claimed: set[int] = set()
    targets: list[frozenset[int]] = []
    for byte_set in sets:
        exclusive = byte_set - claimed
        chosen = exclusive if exclusive else byte_set
        if chosen:
            targets.append(frozenset(chosen))
        claimed |= byte_set

    while targets and not executor.clock.exhausted():
        for byte_set in targets:
            if executor.clock.exhausted():
                break
            executor.run(_mutate_bytes(seed, byte_set, rng))
    return sink


def _mutate_bytes(seed: bytes, byte_set: frozenset[int], rng: random.Random) -> bytes:
    """Mutate a nonempty random subset of the given bytes; everything else
    is byte-identical to the seed."""
    buf = bytearray(seed)
    indices = sorted(byte_set)
    chosen = [i for i in indices if rng.random() < 0.5]
    if not chosen:
        chosen = [indices[rng.randrange(len(indices))]]
    for i in chosen:
        if rng.randrange(2):
            buf[i] = rng.randrange(256)
        else:
            delta = rng.randint(1, ARITH_SPAN) * (1 if rng.randrange(2) else -1)
            buf[i] = (buf[i] + delta) & 0xFF
    return bytes(buf)
