"""Built-in mock target corpus.

Five tiny deterministic targets covering the structures extraction has
to cope with: a single guarded branch, a two-branch conjunction, a value
threshold, an imbalanced-reachability layout with a rare cosmetic block,
and a two-cause disjunction with a multi-candidate ground truth.  Each
registers a block map, ground truth and a crashing seed, so they drop
into every pipeline stage exactly like native targets.

Block-map convention: a conditional block is registered at the source
line of its guard, which is also where fixes apply; that line is the
registered ground truth.
"""

from __future__ import annotations

from pathlib import Path

from rcab.harness import TargetSpec, format_manifest
from rcab.mock import parse_program
from rcab.model import BlockSite, GroundTruth, Location


class MockDef:
    def __init__(
        self,
        name: str,
        program: str,
        block_map: list[tuple[int, int, bool]],  # (id, line, conditional)
        ground_truth: list[tuple[int, str]],  # (line, note)
        crash_seed: bytes,
        benign_seed: bytes,
        description: str,
    ):
        self.name = name
        self.program = program
        self.block_map = block_map
        self.ground_truth = ground_truth
        self.crash_seed = crash_seed
        self.benign_seed = benign_seed
        self.description = description

    def spec(self, base_dir: Path | None = None) -> TargetSpec:
        src = f"{self.name}.c"
        sites = tuple(
            BlockSite(bid, Location(src, line), conditional=cond)
            for bid, line, cond in self.block_map
        )
        gt = GroundTruth(
            frozenset(Location(src, line) for line, _ in self.ground_truth),
            {Location(src, line): note for line, note in self.ground_truth},
        )
        base = Path(base_dir) if base_dir is not None else Path(".")
        return TargetSpec(
            id=self.name,
            kind="mock",
            timeout_ms=1000,
            crash_signals=frozenset({11, 6, 7, 8}),
            crash_exit_codes=frozenset(),
            block_map=sites,
            ground_truth=gt,
            seeds=(base / "seeds" / "poc.bin",),
            benign_seeds=(base / "seeds" / "benign.bin",),
            program=parse_program(self.program),
            base_dir=base,
        )


# crash <=> input[0] == 4
M1 = MockDef(
    name="m1",
    program="""
        EMIT 1
        LOAD 0
        VAL 1
        IF == 4 GOTO C
        EXIT 0
        C:
        EMIT 2
        CRASH 11
    """,
    block_map=[(1, 2, False), (2, 4, True)],
    ground_truth=[(4, "branch body entered only when byte 0 equals 4")],
    crash_seed=bytes([4]),
    benign_seed=bytes([0]),
    description="single guarded branch; byte 0 equal to 4 crashes",
)

# crash <=> input[0] == 4 and input[1] >= 10
M2 = MockDef(
    name="m2",
    program="""
        EMIT 1
        LOAD 0
        VAL 1
        IF == 4 GOTO A
        EXIT 0
        A:
        EMIT 2
        LOAD 1
        IF >= 10 GOTO B
        EXIT 0
        B:
        EMIT 3
        CRASH 11
    """,
    block_map=[(1, 2, False), (2, 4, True), (3, 6, True)],
    ground_truth=[(6, "inner branch reached only on the crashing path")],
    crash_seed=bytes([4, 10]),
    benign_seed=bytes([4, 3]),
    description="two chained branches; both conditions needed to crash",
)

# crash <=> input[0] >= 200; the guard's value is recorded at the guard line
M3 = MockDef(
    name="m3",
    program="""
        EMIT 1
        LOAD 0
        VAL 2
        IF >= 200 GOTO C
        EXIT 0
        C:
        EMIT 2
        CRASH 11
    """,
    block_map=[(1, 2, False), (2, 4, True)],
    ground_truth=[(4, "threshold guard; values of byte 0 over 199 crash")],
    crash_seed=bytes([230]),
    benign_seed=bytes([100]),
    description="value-threshold bug; byte 0 of 200 or more crashes",
)

# crash <=> input[0] == 9; byte 1 == 77 visits a rare unrelated block
M4 = MockDef(
    name="m4",
    program="""
        EMIT 1
        LOAD 1
        IF != 77 GOTO M
        EMIT 2
        M:
        EMIT 3
        LOAD 0
        VAL 4
        IF == 9 GOTO C
        EXIT 0
        C:
        EMIT 4
        CRASH 11
    """,
    block_map=[(1, 2, False), (2, 4, True), (3, 6, False), (4, 9, True)],
    ground_truth=[(9, "guard admitting the crashing value of byte 0")],
    crash_seed=bytes([9, 3]),
    benign_seed=bytes([0, 77]),
    description="rarely reached cosmetic block next to the real cause",
)

# crash <=> input[0] == 4 or input[1] >= 250; two valid fix sites
M5 = MockDef(
    name="m5",
    program="""
        EMIT 1
        LOAD 0
        IF == 4 GOTO C
        LOAD 1
        IF >= 250 GOTO D
        EXIT 0
        C:
        EMIT 2
        VAL 2
        CRASH 11
        D:
        EMIT 3
        CRASH 6
    """,
    block_map=[(1, 2, False), (2, 5, True), (3, 8, True)],
    ground_truth=[
        (5, "first crashing branch; a check here fixes the common path"),
        (8, "second crashing branch; alternative fix site"),
    ],
    crash_seed=bytes([4, 0]),
    benign_seed=bytes([0, 0]),
    description="two independent crash causes with multi-candidate truth",
)

MOCKS: dict[str, MockDef] = {m.name: m for m in (M1, M2, M3, M4, M5)}


def spec(name: str) -> TargetSpec:
    """In-memory TargetSpec for a built-in mock (no files written)."""
    return MOCKS[name].spec()


def install(dest_dir: Path, names=None) -> dict[str, Path]:
    """Write manifest + seed files for built-in mocks; returns the manifest
    path per name.  This is how the CLI and the bench reach mock targets."""
    dest_dir = Path(dest_dir)
    out: dict[str, Path] = {}
    for name in names or sorted(MOCKS):
        mdef = MOCKS[name]
        tdir = dest_dir / name
        (tdir / "seeds").mkdir(parents=True, exist_ok=True)
        (tdir / "seeds" / "poc.bin").write_bytes(mdef.crash_seed)
        (tdir / "seeds" / "benign.bin").write_bytes(mdef.benign_seed)
        manifest = tdir / "manifest.rcab"
        manifest.write_text(format_manifest(mdef.spec(tdir)))
        out[name] = manifest
    return out
