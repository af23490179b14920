"""Corpus self-test.

Exercises the native targets purely through their external surfaces:
the binaries with RCAB_TRACE, the manifest text files, and the rcab CLI
(exec / bench / results.csv).
"""

import csv
import os
import re
import subprocess
import textwrap
from pathlib import Path

import pytest

from conftest import TARGET_NAMES, TARGETS_DIR, rcab_argv


def run_raw(name: str, input_path: Path, trace_path: Path):
    """Run a target binary directly with the trace env var set."""
    env = os.environ.copy()
    env["RCAB_TRACE"] = str(trace_path)
    return subprocess.run(
        [f"./{name}", str(input_path)],
        cwd=TARGETS_DIR / name,
        env=env,
        capture_output=True,
        timeout=10,
    )


def manifest_sections(name: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current = None
    for raw in (TARGETS_DIR / name / "manifest.rcab").read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.endswith(":") and " " not in line:
            current = line[:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return sections


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_crashing_seed_crashes_with_parseable_trace(name, tmp_path):
    trace_path = tmp_path / "poc.trc"
    proc = run_raw(name, TARGETS_DIR / name / "seeds" / "poc.bin", trace_path)
    assert proc.returncode < 0, f"{name} poc did not die on a signal"
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "RCAB1"
    assert re.fullmatch(r"S \d+", lines[-1]), lines[-1]
    for line in lines[1:-1]:
        assert re.fullmatch(r"(B \d+|V \d+ -?\d+)", line), line


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_benign_seed_exits_cleanly(name, tmp_path):
    trace_path = tmp_path / "benign.trc"
    proc = run_raw(name, TARGETS_DIR / name / "seeds" / "benign.bin", trace_path)
    assert proc.returncode == 0
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "RCAB1"
    assert lines[-1] == "X 0"


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_traces_are_deterministic(name, tmp_path):
    first = tmp_path / "a.trc"
    second = tmp_path / "b.trc"
    run_raw(name, TARGETS_DIR / name / "seeds" / "poc.bin", first)
    run_raw(name, TARGETS_DIR / name / "seeds" / "poc.bin", second)
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_runtime_disabled_without_env_var(name, tmp_path):
    env = {k: v for k, v in os.environ.items() if k != "RCAB_TRACE"}
    proc = subprocess.run(
        [f"./{name}", str(TARGETS_DIR / name / "seeds" / "benign.bin")],
        cwd=TARGETS_DIR / name,
        env=env,
        capture_output=True,
        timeout=10,
    )
    assert proc.returncode == 0  # target still runs, just untraced


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_cli_exec_verdicts(name):
    manifest = TARGETS_DIR / name / "manifest.rcab"
    out = subprocess.run(
        rcab_argv()
        + ["exec", "--target", str(manifest), "--input", str(TARGETS_DIR / name / "seeds" / "poc.bin")],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert out.returncode == 0, out.stderr
    assert "verdict=crash" in out.stdout
    out = subprocess.run(
        rcab_argv()
        + ["exec", "--target", str(manifest), "--input", str(TARGETS_DIR / name / "seeds" / "benign.bin")],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert "verdict=noncrash" in out.stdout


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_block_map_lines_point_at_instrumentation(name):
    source = (TARGETS_DIR / name / "main.c").read_text().splitlines()
    for entry in manifest_sections(name)["block_map"]:
        parts = entry.split()
        site_id = int(parts[0])
        _, line_no = parts[1].rsplit(":", 1)
        code = source[int(line_no) - 1]
        assert re.search(
            rf"TRACE_(BLOCK|VAL)\({site_id}[,)]", code
        ), f"{name} site {site_id} not instrumented at main.c:{line_no}: {code!r}"


def test_missnull_registers_exactly_two_candidates():
    assert len(manifest_sections("missnull")["ground_truth"]) == 2


def test_every_target_registers_at_least_one_seed():
    for name in TARGET_NAMES:
        assert manifest_sections(name)["seeds"], name


@pytest.mark.slow
def test_scaled_benchmark_offbyone_top10(tmp_path):
    """Five 5-minute aflcem campaigns on offbyone; both extractors must
    place the ground-truth guard line in the Top-10 in at least 4 of 5
    trials."""
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(
        textwrap.dedent(
            f"""\
            trials 5
            budget 5m
            base_rng 1
            workers 1
            out_dir out

            targets:
            {TARGETS_DIR / 'offbyone' / 'manifest.rcab'}

            augmenters:
            aflcem

            extractors:
            vulnloc
            aurora
            """
        )
    )
    proc = subprocess.run(
        rcab_argv() + ["bench", "--config", str(cfg)],
        capture_output=True,
        text=True,
        timeout=2100,
    )
    assert proc.returncode == 0, proc.stderr
    with open(tmp_path / "out" / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10  # 5 trials x 2 extractors x 1 snapshot
    for extractor in ("vulnloc", "aurora"):
        ranks = [
            int(r["rank"])
            for r in rows
            if r["extractor"] == extractor and r["rank"].isdigit()
        ]
        in_top10 = sum(1 for rank in ranks if rank <= 10)
        assert in_top10 >= 4, f"{extractor}: ranks {ranks}"
