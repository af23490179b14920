"""On-disk formats: the line-oriented trace file protocol and the dataset
directory layout.

Trace files are bit-exact, line-oriented ASCII:

    RCAB1
    B <block_id>
    V <site_id> <signed-64-bit-decimal>
    X <exit_code>     (or)     S <signal>

The header is mandatory, events appear in execution order and a valid
trace has exactly one terminal line (X for a process exit, S for a fatal
signal).  Traces of timed-out or harness-failed runs are stored without
a terminal line; their verdict lives in the dataset index.

A dataset directory holds one campaign:

    dataset.meta    key/value: target_id, rng_seed, augmenter_id
    samples.idx     one line per sample:
                    <seq> <born_at_ms> <verdict> <input-file> <trace-file>
    inputs/<seq>.bin
    traces/<seq>.trc
"""

from __future__ import annotations

from pathlib import Path

from rcab.model import (
    BlockHit,
    Dataset,
    Sample,
    Trace,
    ValueRecord,
    Verdict,
    VerdictKind,
)

TRACE_HEADER = "RCAB1"


class TraceParseError(Exception):
    """Malformed trace file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_trace(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    for ev in trace.events:
        if isinstance(ev, BlockHit):
            lines.append(f"B {ev.block_id}")
        else:
            lines.append(f"V {ev.site_id} {ev.value}")
    term = _terminal_line(trace.terminal)
    if term is not None:
        lines.append(term)
    return "\n".join(lines) + "\n"


def _terminal_line(verdict: Verdict) -> str | None:
    # Timeout/harness-error runs have no protocol terminal; the index
    # carries their verdict instead.
    if verdict.kind is VerdictKind.CRASH:
        if verdict.signal is not None:
            return f"S {verdict.signal}"
        return f"X {verdict.exit_code}"
    if verdict.kind is VerdictKind.NONCRASH:
        return f"X {verdict.exit_code}"
    return None


def parse_trace_events(text: str) -> tuple[list, tuple[str, int] | None]:
    """Parse trace text into (events, terminal) where terminal is
    ('X', exit_code) or ('S', signal) or None for a truncated trace.

    Events after a terminal line, a missing header or any malformed line
    raise TraceParseError.
    """
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise TraceParseError(f"missing {TRACE_HEADER} header", 1)
    events: list = []
    terminal: tuple[str, int] | None = None
    for no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if terminal is not None:
            raise TraceParseError("event after terminal line", no)
        parts = line.split()
        try:
            if parts[0] == "B" and len(parts) == 2:
                events.append(BlockHit(int(parts[1])))
            elif parts[0] == "V" and len(parts) == 3:
                events.append(ValueRecord(int(parts[1]), int(parts[2])))
            elif parts[0] == "X" and len(parts) == 2:
                terminal = ("X", int(parts[1]))
            elif parts[0] == "S" and len(parts) == 2:
                terminal = ("S", int(parts[1]))
            else:
                raise TraceParseError(f"unrecognized line {line!r}", no)
        except ValueError as e:
            raise TraceParseError(str(e), no) from None
    return events, terminal


def _verdict_token(v: Verdict) -> str:
    tag = v.kind.value.upper()
    if v.signal is not None:
        return f"{tag}:S{v.signal}"
    if v.exit_code is not None:
        return f"{tag}:X{v.exit_code}"
    return tag


def _parse_verdict_token(token: str) -> Verdict:
    tag, _, detail = token.partition(":")
    kind = VerdictKind(tag.lower())
    signal = exit_code = None
    if detail.startswith("S"):
        signal = int(detail[1:])
    elif detail.startswith("X"):
        exit_code = int(detail[1:])
    elif detail:
        raise ValueError(f"bad verdict detail {detail!r}")
    return Verdict(kind=kind, signal=signal, exit_code=exit_code)


def save_dataset(dataset: Dataset, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    (out_dir / "inputs").mkdir(parents=True, exist_ok=True)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    meta = (
        f"target_id {dataset.target_id}\n"
        f"rng_seed {dataset.rng_seed}\n"
        f"augmenter_id {dataset.augmenter_id}\n"
    )
    (out_dir / "dataset.meta").write_text(meta)
    idx_lines = []
    for seq, sample in enumerate(dataset.samples):
        input_rel = f"inputs/{seq:08d}.bin"
        trace_rel = f"traces/{seq:08d}.trc"
        (out_dir / input_rel).write_bytes(sample.input)
        (out_dir / trace_rel).write_text(format_trace(sample.trace))
        idx_lines.append(
            f"{seq} {sample.born_at} {_verdict_token(sample.verdict)} "
            f"{input_rel} {trace_rel}"
        )
    (out_dir / "samples.idx").write_text("\n".join(idx_lines) + ("\n" if idx_lines else ""))


def load_dataset(dir_path: Path) -> Dataset:
    dir_path = Path(dir_path)
    meta: dict[str, str] = {}
    for line in (dir_path / "dataset.meta").read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(" ")
            meta[key] = value
    dataset = Dataset(
        target_id=meta["target_id"],
        rng_seed=int(meta["rng_seed"]),
        augmenter_id=meta["augmenter_id"],
    )
    idx = dir_path / "samples.idx"
    for no, raw in enumerate(idx.read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 5:
            raise ValueError(f"{idx}: line {no}: expected 5 fields, got {len(parts)}")
        _, born_at, verdict_tok, input_rel, trace_rel = parts
        verdict = _parse_verdict_token(verdict_tok)
        input_bytes = (dir_path / input_rel).read_bytes()
        events, terminal = parse_trace_events((dir_path / trace_rel).read_text())
        if terminal is not None and _terminal_line(verdict) != f"{terminal[0]} {terminal[1]}":
            raise ValueError(
                f"{idx}: line {no}: trace terminal {terminal} disagrees with "
                f"index verdict {verdict_tok}"
            )
        trace = Trace(events=tuple(events), terminal=verdict)
        dataset.append(Sample.from_trace(input_bytes, trace, born_at=int(born_at)))
    return dataset
