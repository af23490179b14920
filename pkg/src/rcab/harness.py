"""Target loading and execution.

A target is described by a plain-text manifest with scalar `key value`
lines followed by sections (`block_map:`, `ground_truth:`, `seeds:`,
`benign_seeds:`, `program:`).  Native targets are executed as child
processes that write the trace protocol to the file named by the
RCAB_TRACE environment variable; mock targets run in-process through the
mock interpreter.  Either way the result is a Sample whose verdict comes
from the target's registered crash signals / crash exit codes.

Manifest example:

    id offbyone
    exec ./offbyone {input}
    input_mode FileArg
    timeout_ms 2000
    crash_signals 11 6 7 8
    crash_exit_codes

    block_map:
    0 main.c:12
    1 main.c:30 cond

    ground_truth:
    main.c:30 the guard admits the overflowing count

    seeds:
    seeds/poc.bin

Paths are relative to the manifest's directory.  Mock manifests say
`kind mock`, drop `exec`/`input_mode`, and add a `program:` section.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from rcab.mock import (
    DEFAULT_CRASH_SIGNALS,
    MockProgram,
    MockProgramError,
    format_program,
    interpret_mock,
    parse_program,
)
from rcab.model import (
    BlockHit,
    BlockSite,
    GroundTruth,
    Location,
    Sample,
    Trace,
    Verdict,
    VerdictKind,
)
from rcab.store import TraceParseError, parse_trace_events

#: Environment variables passed through to target processes; everything
#: else is cleared for reproducibility.
ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR")

INPUT_PLACEHOLDER = "{input}"

_SECTIONS = ("block_map", "ground_truth", "seeds", "benign_seeds", "program")


class InputMode(Enum):
    FILE_ARG = "FileArg"
    STDIN = "Stdin"


class ManifestError(Exception):
    """Parse failure; message carries file and 1-based line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class ManifestValidationError(Exception):
    """A parsed manifest violates a TargetSpec invariant."""


@dataclass(frozen=True)
class TargetSpec:
    id: str
    kind: str  # "native" | "mock"
    timeout_ms: int
    crash_signals: frozenset[int]
    crash_exit_codes: frozenset[int]
    block_map: tuple[BlockSite, ...]
    ground_truth: GroundTruth
    seeds: tuple[Path, ...]
    benign_seeds: tuple[Path, ...] = ()
    exec_template: str | None = None
    input_mode: InputMode = InputMode.FILE_ARG
    program: MockProgram | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        validate_spec(self)

    def site_by_id(self) -> dict[int, BlockSite]:
        return {s.id: s for s in self.block_map}

    def locations(self) -> list[Location]:
        """Distinct mapped locations in deterministic (file, line) order."""
        return sorted({s.location for s in self.block_map})

    def conditional_ids(self) -> frozenset[int]:
        return frozenset(s.id for s in self.block_map if s.conditional)


def validate_spec(spec: TargetSpec) -> None:
    if not spec.id:
        raise ManifestValidationError("target id must be non-empty")
    if spec.timeout_ms <= 0:
        raise ManifestValidationError("timeout_ms must be > 0")
    if not spec.block_map:
        raise ManifestValidationError("block_map must be non-empty")
    ids = [s.id for s in spec.block_map]
    if len(ids) != len(set(ids)):
        raise ManifestValidationError("block_map ids must be unique")
    if not spec.seeds:
        raise ManifestValidationError("seeds must be non-empty")
    mapped = {s.location for s in spec.block_map}
    for cand in sorted(spec.ground_truth.candidates):
        if cand not in mapped:
            raise ManifestValidationError(
                f"ground-truth location {cand} does not resolve to any "
                "block_map entry"
            )
    if spec.kind == "native":
        if not spec.exec_template:
            raise ManifestValidationError("native target needs an exec template")
        n_placeholders = spec.exec_template.count(INPUT_PLACEHOLDER)
        if spec.input_mode is InputMode.FILE_ARG and n_placeholders != 1:
            raise ManifestValidationError(
                f"FileArg exec template must contain exactly one "
                f"{INPUT_PLACEHOLDER}, found {n_placeholders}"
            )
        if spec.input_mode is InputMode.STDIN and n_placeholders != 0:
            raise ManifestValidationError(
                f"Stdin exec template must not contain {INPUT_PLACEHOLDER}"
            )
    elif spec.kind == "mock":
        if spec.program is None:
            raise ManifestValidationError("mock target needs a program section")
        unknown = spec.program.referenced_ids() - set(ids)
        if unknown:
            raise ManifestValidationError(
                f"program references ids not in block_map: {sorted(unknown)}"
            )
    else:
        raise ManifestValidationError(f"unknown target kind {spec.kind!r}")


def load_manifest(path) -> TargetSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    scalars, sections = parse_kv_sections(path)
    base_dir = path.parent.resolve()

    def scalar(key: str, default: str | None = None) -> str | None:
        return scalars.get(key, (default, 0))[0]

    kind = scalar("kind", "native")
    crash_signals = _int_set(scalar("crash_signals"), DEFAULT_CRASH_SIGNALS)
    crash_exit_codes = _int_set(scalar("crash_exit_codes"), frozenset())

    block_map = []
    for no, line in sections.get("block_map", []):
        parts = line.split()
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "cond"):
            raise ManifestError(path, no, f"expected '<id> <file>:<line> [cond]', got {line!r}")
        try:
            site_id = int(parts[0])
            loc = Location.parse(parts[1])
        except ValueError as e:
            raise ManifestError(path, no, str(e)) from None
        block_map.append(BlockSite(site_id, loc, conditional=len(parts) == 3))

    candidates = []
    notes = {}
    for no, line in sections.get("ground_truth", []):
        loc_text, _, note = line.partition(" ")
        try:
            loc = Location.parse(loc_text)
        except ValueError as e:
            raise ManifestError(path, no, str(e)) from None
        candidates.append(loc)
        if note.strip():
            notes[loc] = note.strip()
    if not candidates:
        raise ManifestValidationError(f"{path}: ground_truth section is empty")

    seeds = _seed_paths(path, base_dir, sections.get("seeds", []))
    benign = _seed_paths(path, base_dir, sections.get("benign_seeds", []))

    program = None
    if "program" in sections:
        text = "\n".join(line for _, line in sections["program"])
        try:
            program = parse_program(text)
        except MockProgramError as e:
            raise ManifestError(path, 0, f"program section: {e}") from None

    input_mode_text = scalar("input_mode", InputMode.FILE_ARG.value)
    try:
        input_mode = InputMode(input_mode_text)
    except ValueError:
        no = scalars["input_mode"][1]
        raise ManifestError(path, no, f"unknown input_mode {input_mode_text!r}") from None

    try:
        return TargetSpec(
            id=scalar("id", ""),
            kind=kind,
            exec_template=scalar("exec"),
            input_mode=input_mode,
            timeout_ms=int(scalar("timeout_ms", "5000")),
            crash_signals=crash_signals,
            crash_exit_codes=crash_exit_codes,
            block_map=tuple(block_map),
            ground_truth=GroundTruth(frozenset(candidates), notes),
            seeds=seeds,
            benign_seeds=benign,
            program=program,
            base_dir=base_dir,
        )
    except ValueError as e:
        raise ManifestValidationError(f"{path}: {e}") from None


def parse_kv_sections(path: Path, section_names=_SECTIONS):
    """Split a `key value` + `section:` plain-text file (the format shared
    by target manifests and bench configurations).

    Returns ({key: (value, line_no)}, {section: [(line_no, line), ...]}).
    Only names from `section_names` open a section; any other trailing
    colon (e.g. a mock program label) stays inside the current section.
    """
    scalars: dict[str, tuple[str, int]] = {}
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.endswith(":") and line[:-1] in section_names:
            current = line[:-1]
            if current in sections:
                raise ManifestError(path, no, f"duplicate section {current!r}")
            sections[current] = []
            continue
        if current is not None:
            sections[current].append((no, line))
            continue
        key, _, value = line.partition(" ")
        if key in scalars:
            raise ManifestError(path, no, f"duplicate key {key!r}")
        scalars[key] = (value.strip(), no)
    return scalars, sections


def _int_set(text: str | None, default: frozenset[int]) -> frozenset[int]:
    if text is None:
        return default
    return frozenset(int(tok) for tok in text.split())


def _seed_paths(path, base_dir: Path, entries) -> tuple[Path, ...]:
    seeds = []
    for no, line in entries:
        seed = (base_dir / line).resolve()
        if not seed.is_file():
            raise ManifestError(path, no, f"seed file not found: {line}")
        seeds.append(seed)
    return tuple(seeds)


def format_manifest(spec: TargetSpec) -> str:
    """Render a manifest; paths are written relative to spec.base_dir."""
    lines = [f"id {spec.id}", f"kind {spec.kind}", f"timeout_ms {spec.timeout_ms}"]
    if spec.exec_template:
        lines.append(f"exec {spec.exec_template}")
        lines.append(f"input_mode {spec.input_mode.value}")
    lines.append("crash_signals " + " ".join(map(str, sorted(spec.crash_signals))))
    lines.append(
        "crash_exit_codes " + " ".join(map(str, sorted(spec.crash_exit_codes)))
    )
    lines.append("")
    lines.append("block_map:")
    for site in spec.block_map:
        cond = " cond" if site.conditional else ""
        lines.append(f"{site.id} {site.location}{cond}")
    lines.append("")
    lines.append("ground_truth:")
    for cand in sorted(spec.ground_truth.candidates):
        note = spec.ground_truth.notes.get(cand, "")
        lines.append(f"{cand} {note}".rstrip())
    lines.append("")
    lines.append("seeds:")
    for seed in spec.seeds:
        lines.append(os.path.relpath(seed, spec.base_dir))
    if spec.benign_seeds:
        lines.append("")
        lines.append("benign_seeds:")
        for seed in spec.benign_seeds:
            lines.append(os.path.relpath(seed, spec.base_dir))
    if spec.program is not None:
        lines.append("")
        lines.append("program:")
        lines.append(format_program(spec.program).rstrip("\n"))
    return "\n".join(lines) + "\n"


class Harness:
    """Executes one target on inputs and classifies the outcomes.

    Shareable read-only across workers; each Harness keeps its own temp
    directory for input/trace files, so use one instance per worker.
    """

    def __init__(self, spec: TargetSpec, work_dir: Path | None = None):
        self.spec = spec
        if work_dir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix=f"rcab-{spec.id}-")
            self.work_dir = Path(self._tmp.name)
        else:
            self._tmp = None
            self.work_dir = Path(work_dir)
            self.work_dir.mkdir(parents=True, exist_ok=True)
        self._counter = 0
        self._known_ids = frozenset(s.id for s in spec.block_map)

    def run(self, input_bytes: bytes, born_at: int = 0) -> Sample:
        if self.spec.kind == "mock":
            return interpret_mock(
                self.spec.program,
                input_bytes,
                crash_signals=self.spec.crash_signals,
                crash_exit_codes=self.spec.crash_exit_codes,
                born_at=born_at,
            )
        return self._run_native(input_bytes, born_at)

    def _run_native(self, input_bytes: bytes, born_at: int) -> Sample:
        self._counter += 1
        trace_path = self.work_dir / f"trace_{self._counter}.trc"
        input_path = self.work_dir / f"input_{self._counter}.bin"
        argv = shlex.split(self.spec.exec_template)
        stdin = None
        if self.spec.input_mode is InputMode.FILE_ARG:
            input_path.write_bytes(input_bytes)
            argv = [a.replace(INPUT_PLACEHOLDER, str(input_path)) for a in argv]
        else:
            stdin = input_bytes
        env = {k: os.environ[k] for k in ENV_ALLOWLIST if k in os.environ}
        env["RCAB_TRACE"] = str(trace_path)
        timed_out = False
        try:
            proc = subprocess.run(
                argv,
                input=stdin,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=self.spec.timeout_ms / 1000.0,
                env=env,
                cwd=self.spec.base_dir,
            )
            returncode = proc.returncode
        except subprocess.TimeoutExpired:
            timed_out = True
            returncode = None
        try:
            sample = self._classify(input_bytes, trace_path, returncode, timed_out, born_at)
        finally:
            trace_path.unlink(missing_ok=True)
            input_path.unlink(missing_ok=True)
        return sample

    def _classify(
        self,
        input_bytes: bytes,
        trace_path: Path,
        returncode: int | None,
        timed_out: bool,
        born_at: int,
    ) -> Sample:
        events: list = []
        terminal: tuple[str, int] | None = None
        corrupt: str | None = None
        try:
            text = trace_path.read_text()
        except OSError:
            corrupt = "trace file missing"
        else:
            try:
                events, terminal = parse_trace_events(text)
            except TraceParseError as e:
                corrupt = f"corrupt trace: {e}"
                events = []
        if corrupt is None:
            bad = {
                e.block_id if isinstance(e, BlockHit) else e.site_id for e in events
            } - self._known_ids
            if bad:
                corrupt = f"trace mentions unmapped ids {sorted(bad)}"
                events = []

        if timed_out:
            verdict = Verdict(VerdictKind.TIMEOUT)
        elif corrupt is not None:
            verdict = self._harness_error(returncode)
        elif returncode < 0:
            signal = -returncode
            if signal not in self.spec.crash_signals:
                # Unexpected fatal signal outside the registered crash set:
                # a harness anomaly, not a scored outcome.
                verdict = Verdict(VerdictKind.HARNESS_ERROR, signal=signal)
            elif terminal is None or terminal == ("S", signal):
                # A truncated trace with a crash signal is repaired to a
                # Crash terminal: the handler may die before flushing.
                verdict = Verdict(VerdictKind.CRASH, signal=signal)
            else:
                verdict = self._harness_error(returncode)
        else:
            if terminal is None or terminal != ("X", returncode):
                # Normal exit with no/foreign terminal means the runtime
                # never finalized: surface it, never score it.
                verdict = self._harness_error(returncode)
            elif returncode in self.spec.crash_exit_codes:
                verdict = Verdict(VerdictKind.CRASH, exit_code=returncode)
            else:
                verdict = Verdict(VerdictKind.NONCRASH, exit_code=returncode)

        trace = Trace(events=tuple(events), terminal=verdict)
        return Sample.from_trace(input_bytes, trace, born_at=born_at)

    @staticmethod
    def _harness_error(returncode: int | None) -> Verdict:
        if returncode is None:
            return Verdict(VerdictKind.HARNESS_ERROR)
        if returncode < 0:
            return Verdict(VerdictKind.HARNESS_ERROR, signal=-returncode)
        return Verdict(VerdictKind.HARNESS_ERROR, exit_code=returncode)


def execute(spec: TargetSpec, input_bytes: bytes, deadline_ms: int | None = None) -> Sample:
    """One-shot convenience wrapper around Harness for single executions."""
    if deadline_ms is not None:
        spec = replace(spec, timeout_ms=deadline_ms)
    return Harness(spec).run(input_bytes)
