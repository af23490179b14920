"""Deterministic in-process mock targets.

A mock program is a tiny loop-free instruction list over one accumulator:

    LOAD <i>              load input byte i (0 when out of bounds)
    EMIT <block_id>       record a block hit
    VAL <site_id>         record the accumulator value at a site
    IF <cmp> <k> GOTO <L> forward jump when `acc <cmp> k` holds
    CRASH <sig>           terminate with fatal signal <sig>
    EXIT <code>           terminate with exit code <code>
    <L>:                  label definition (on its own line)

Jumps must go strictly forward, so every program terminates and each
instruction runs at most once.  Falling off the end is an implicit
EXIT 0.  Same program + same input always yields the identical trace,
which is what makes campaign-level determinism testable.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

from rcab.model import (
    BlockHit,
    Sample,
    Trace,
    ValueRecord,
    Verdict,
    VerdictKind,
)

#: Numeric values of SIGSEGV, SIGABRT, SIGBUS, SIGFPE: the default set of
#: signals classified as crashes.
DEFAULT_CRASH_SIGNALS = frozenset({11, 6, 7, 8})

_CMP = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class MockProgramError(Exception):
    pass


@dataclass(frozen=True)
class Instr:
    op: str
    args: tuple

    def __str__(self) -> str:
        if self.op == "IF":
            cmp, k, label = self.args
            return f"IF {cmp} {k} GOTO {label}"
        return " ".join([self.op, *map(str, self.args)])


@dataclass(frozen=True)
class MockProgram:
    instructions: tuple[Instr, ...]
    labels: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for idx, instr in enumerate(self.instructions):
            if instr.op == "IF":
                label = instr.args[2]
                if label not in self.labels:
                    raise MockProgramError(f"undefined GOTO target {label!r}")
                if self.labels[label] <= idx:
                    raise MockProgramError(
                        f"backward jump to {label!r} at instruction {idx}; "
                        "loops are forbidden"
                    )

    def referenced_ids(self) -> set[int]:
        """All block/site ids the program can emit."""
        return {
            i.args[0] for i in self.instructions if i.op in ("EMIT", "VAL")
        }


def parse_program(text: str) -> MockProgram:
    """Parse mock program text; raises MockProgramError with a line number."""
    instructions: list[Instr] = []
    labels: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":") and len(line.split()) == 1:
            name = line[:-1]
            if name in labels:
                raise MockProgramError(f"line {no}: duplicate label {name!r}")
            labels[name] = len(instructions)
            continue
        parts = line.split()
        op = parts[0].upper()
        try:
            if op in ("LOAD", "EMIT", "VAL"):
                if len(parts) != 2:
                    raise ValueError("needs one operand")
                instructions.append(Instr(op, (int(parts[1]),)))
            elif op in ("CRASH", "EXIT"):
                if len(parts) != 2:
                    raise ValueError("needs one operand")
                instructions.append(Instr(op, (int(parts[1]),)))
            elif op == "IF":
                if len(parts) != 5 or parts[3].upper() != "GOTO":
                    raise ValueError("expected IF <cmp> <k> GOTO <label>")
                if parts[1] not in _CMP:
                    raise ValueError(f"unknown comparison {parts[1]!r}")
                instructions.append(Instr("IF", (parts[1], int(parts[2]), parts[4])))
            else:
                raise ValueError(f"unknown instruction {op!r}")
        except ValueError as e:
            raise MockProgramError(f"line {no}: {e}") from None
    try:
        return MockProgram(tuple(instructions), labels)
    except MockProgramError as e:
        raise MockProgramError(str(e)) from None


def format_program(program: MockProgram) -> str:
    by_index: dict[int, list[str]] = {}
    for name, idx in program.labels.items():
        by_index.setdefault(idx, []).append(name)
    lines: list[str] = []
    for idx, instr in enumerate(program.instructions):
        for name in sorted(by_index.get(idx, [])):
            lines.append(f"{name}:")
        lines.append(str(instr))
    for name in sorted(by_index.get(len(program.instructions), [])):
        lines.append(f"{name}:")
    return "\n".join(lines) + "\n"


def interpret_mock(
    program: MockProgram,
    input: bytes,
    crash_signals: frozenset[int] = DEFAULT_CRASH_SIGNALS,
    crash_exit_codes: frozenset[int] = frozenset(),
    born_at: int = 0,
) -> Sample:
    """Execute a mock program on an input; deterministic by construction.

    Terminal classification matches the native harness: CRASH's signal is
    a crash only when listed in crash_signals (otherwise the run counts as
    a harness error), EXIT's code is a crash when listed in
    crash_exit_codes and a normal exit otherwise.
    """
    events: list = []
    acc = 0
    pc = 0
    steps = 0
    terminal: Verdict | None = None
    while pc < len(program.instructions):
        steps += 1
        if steps > len(program.instructions):
            raise MockProgramError("instruction budget exceeded; loop slipped in")
        instr = program.instructions[pc]
        pc += 1
        if instr.op == "LOAD":
            i = instr.args[0]
            acc = input[i] if 0 <= i < len(input) else 0
        elif instr.op == "EMIT":
            events.append(BlockHit(instr.args[0]))
        elif instr.op == "VAL":
            events.append(ValueRecord(instr.args[0], acc))
        elif instr.op == "IF":
            cmp, k, label = instr.args
            if _CMP[cmp](acc, k):
                pc = program.labels[label]
        elif instr.op == "CRASH":
            sig = instr.args[0]
            if sig in crash_signals:
                terminal = Verdict(VerdictKind.CRASH, signal=sig)
            else:
                terminal = Verdict(VerdictKind.HARNESS_ERROR, signal=sig)
            break
        elif instr.op == "EXIT":
            code = instr.args[0]
            terminal = _classify_exit(code, crash_exit_codes)
            break
    if terminal is None:
        terminal = _classify_exit(0, crash_exit_codes)
    trace = Trace(events=tuple(events), terminal=terminal)
    return Sample.from_trace(input, trace, born_at=born_at)


def _classify_exit(code: int, crash_exit_codes: frozenset[int]) -> Verdict:
    if code in crash_exit_codes:
        return Verdict(VerdictKind.CRASH, exit_code=code)
    return Verdict(VerdictKind.NONCRASH, exit_code=code)
