"""
Shared pytest configuration

Run everything:        pytest
Skip the long checks:  pytest -m "not slow"
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).parent
sys.path.insert(0, str(ROOT))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long numerical checks (minutes)")


@pytest.fixture(autouse=True)
def _repo_root(monkeypatch):
    # relative paths in settings (default config, cache) resolve against the repo root
    monkeypatch.chdir(ROOT)
