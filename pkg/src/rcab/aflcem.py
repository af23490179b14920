"""Crash-exploration mutational augmenter ("aflcem").

Keeps a queue of crashing inputs, mutates them through deterministic
bit-flip and arithmetic stages followed by stacked random havoc, and
records every executed input, crashing or not, into the dataset.  A
mutant joins the queue only when it crashes AND its bucketed edge
coverage contains a pair never seen among queued crashers, so the
queue's combined coverage signature grows monotonically.

Splicing and non-uniform energy schedules are deliberately left out:
campaigns must be bit-reproducible under (rng seed, execution budget).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from rcab.augment import Budget, start_campaign
from rcab.harness import TargetSpec
from rcab.model import Dataset, Trace

MAX_INPUT_LEN = 1 << 20  # cap growth from duplication ops
DEFAULT_ENERGY = 32  # mutations per queue-entry turn

#: Hit counts are classified into these buckets before the novelty test,
#: so loop-count jitter does not flood the queue.
COUNT_CLASS_EDGES = (1, 2, 3, 4, 8, 16, 32, 128)

MAP_SIZE = 1 << 16


class MutationStage(Enum):
    DET_BITFLIP = "DetBitflip"
    DET_ARITH = "DetArith"
    HAVOC = "Havoc"


ARITH_MAX = 35


def mutate(
    data: bytes,
    stage: MutationStage,
    step: int = 0,
    rng: random.Random | None = None,
    max_len: int = MAX_INPUT_LEN,
) -> bytes:
    """One mutation of `data`.

    Deterministic stages enumerate by `step`: DET_BITFLIP flips single
    bits in order (MSB of byte 0 first), DET_ARITH applies +1..+35 then
    -1..-35 to each byte in order.  HAVOC stacks 1..64 random operations
    drawn from {bitflip, byte set, add/sub, block delete, block
    duplicate}; output stays within [1, max_len] bytes.
    """
    if not data:
        raise ValueError("mutate requires a non-empty input")
    buf = bytearray(data)
    if stage is MutationStage.DET_BITFLIP:
        byte, bit = divmod(step, 8)
        buf[byte % len(buf)] ^= 0x80 >> bit
        return bytes(buf)
    if stage is MutationStage.DET_ARITH:
        byte, r = divmod(step, 2 * ARITH_MAX)
        delta = r + 1 if r < ARITH_MAX else -(r - ARITH_MAX + 1)
        i = byte % len(buf)
        buf[i] = (buf[i] + delta) & 0xFF
        return bytes(buf)
    if rng is None:
        raise ValueError("HAVOC requires an rng")
    for _ in range(rng.randint(1, 64)):
        op = rng.randrange(6)
        if op == 0:
            i = rng.randrange(len(buf))
            buf[i] ^= 0x80 >> rng.randrange(8)
        elif op == 1:
            buf[rng.randrange(len(buf))] = rng.randrange(256)
        elif op == 2:
            i = rng.randrange(len(buf))
            buf[i] = (buf[i] + rng.randint(1, ARITH_MAX)) & 0xFF
        elif op == 3:
            i = rng.randrange(len(buf))
            buf[i] = (buf[i] - rng.randint(1, ARITH_MAX)) & 0xFF
        elif op == 4:
            if len(buf) > 1:
                length = rng.randint(1, len(buf) - 1)
                pos = rng.randrange(len(buf) - length + 1)
                del buf[pos : pos + length]
        else:
            if len(buf) < max_len:
                length = rng.randint(1, len(buf))
                pos = rng.randrange(len(buf) - length + 1)
                dest = rng.randrange(len(buf) + 1)
                chunk = buf[pos : pos + length][: max_len - len(buf)]
                buf[dest:dest] = chunk
    return bytes(buf)


class CoverageMap:
    """Bucketed edge coverage over a fixed 2^16-slot map.

    An edge hashes the previous and current block ids into one bucket
    (prev XOR a 5-bit rotation of cur); per-execution hit counts are
    classified into coarse count classes before the novelty test.
    """

    def __init__(self, map_size: int = MAP_SIZE):
        self.map_size = map_size

    @staticmethod
    def _rot(x: int) -> int:
        x &= 0xFFFF
        return ((x << 5) | (x >> 11)) & 0xFFFF

    def signature(self, trace: Trace) -> frozenset[tuple[int, int]]:
        counts: dict[int, int] = {}
        prev = 0
        for block in trace.block_ids():
            edge = (prev ^ self._rot(block)) % self.map_size
            counts[edge] = counts.get(edge, 0) + 1
            prev = block
        return frozenset((edge, self._count_class(n)) for edge, n in counts.items())

    @staticmethod
    def _count_class(n: int) -> int:
        # classes: 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+
        cls = 0
        for i, lower_bound in enumerate(COUNT_CLASS_EDGES):
            if n >= lower_bound:
                cls = i
        return cls


@dataclass
class QueueEntry:
    """A crashing input awaiting mutation.  `cursor` walks the mutation
    pipeline: all bitflips, then all arithmetic steps, then havoc."""

    input: bytes
    coverage_signature: frozenset[tuple[int, int]]
    energy: int = DEFAULT_ENERGY
    cursor: int = field(default=0)

    def next_input(self, rng: random.Random) -> bytes:
        n_bits = len(self.input) * 8
        n_arith = len(self.input) * 2 * ARITH_MAX
        step = self.cursor
        self.cursor += 1
        if step < n_bits:
            return mutate(self.input, MutationStage.DET_BITFLIP, step=step)
        if step < n_bits + n_arith:
            return mutate(self.input, MutationStage.DET_ARITH, step=step - n_bits)
        return mutate(self.input, MutationStage.HAVOC, rng=rng)


def run(
    spec: TargetSpec,
    seed: bytes,
    budget: Budget,
    rng_seed: int,
    sink: Dataset | None = None,
    energy: int = DEFAULT_ENERGY,
) -> Dataset:
    """Run one crash-exploration campaign until the budget is exhausted.

    The seed is executed first (and must crash), counts against the
    budget and becomes the first recorded sample.  Fixed (rng_seed, seed,
    mock target, execution-count budget) reproduces the sink exactly.
    """
    rng = random.Random(rng_seed)
    sink, executor, seed_sample = start_campaign(
        spec, seed, budget, rng_seed, sink, augmenter_id="aflcem"
    )
    coverage = CoverageMap()
    seed_sig = coverage.signature(seed_sample.trace)
    queue = [QueueEntry(seed, seed_sig, energy)]
    seen: set[tuple[int, int]] = set(seed_sig)
    turn = 0
    while not executor.clock.exhausted():
        entry = queue[turn % len(queue)]
        turn += 1
        for _ in range(entry.energy):
            if executor.clock.exhausted():
                break
            child = entry.next_input(rng)
            sample = executor.run(child)
            if not sample.verdict.is_crash:
                continue
            sig = coverage.signature(sample.trace)
            if sig - seen:
                seen |= sig
                queue.append(QueueEntry(child, sig, energy))
    return sink
