"""Shared fixtures plus a summary section for the acceptance criteria.

Tests marked ``@pytest.mark.acceptance("name")`` get one PASS/FAIL line
each in the terminal summary so a criterion can be eyeballed without
scrolling through the full -v listing.
"""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
STUB_BACKEND = Path(__file__).resolve().parent / "stub_backend.py"

# criterion name -> "passed" / "failed" / "skipped", in execution order
_acceptance_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): end-to-end acceptance criterion"
    )


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        name = marker.args[0] if marker.args else item.name
        if report.failed:
            _acceptance_results[name] = "failed"
        elif report.skipped:
            _acceptance_results.setdefault(name, "skipped")
        elif report.when == "call":
            _acceptance_results.setdefault(name, "passed")
    return report


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results.items():
        word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
        terminalreporter.write_line(f"{word}  {name}")


@pytest.fixture(scope="session")
def fixture_tweets() -> Path:
    return DATA_DIR / "fixtures" / "tweets60.jsonl"


@pytest.fixture(scope="session")
def fixture_votes() -> Path:
    return DATA_DIR / "fixtures" / "annotations60.csv"


@pytest.fixture(scope="session")
def keyword_lexicon() -> Path:
    return DATA_DIR / "lexicons" / "keywords.txt"


@pytest.fixture(scope="session")
def location_lexicon() -> Path:
    return DATA_DIR / "lexicons" / "locations.txt"


@pytest.fixture(scope="session")
def python_exe() -> str:
    return sys.executable
