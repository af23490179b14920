import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "rcab",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("rcab")


@pytest.fixture
def mock_manifests(tmp_path):
    """Install the built-in mock corpus into a temp dir; returns
    {name: manifest path}."""
    from rcab import mocks

    return mocks.install(tmp_path / "targets")
