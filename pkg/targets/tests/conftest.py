import shutil
import subprocess
import sys
from pathlib import Path

import pytest

TARGETS_DIR = Path(__file__).resolve().parent.parent
TARGET_NAMES = ("offbyone", "missnull", "incomplete", "staleptr")


def rcab_argv() -> list[str]:
    exe = shutil.which("rcab")
    if exe:
        return [exe]
    return [sys.executable, "-m", "rcab.cli"]


@pytest.fixture(scope="session", autouse=True)
def built_corpus():
    """Build every native target once per test session."""
    subprocess.run(["make", "-C", str(TARGETS_DIR)], check=True, capture_output=True)
    for name in TARGET_NAMES:
        assert (TARGETS_DIR / name / name).is_file(), f"{name} did not build"
    return TARGETS_DIR
