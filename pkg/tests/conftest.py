from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import toy_ontology  # noqa: E402
from treecoder.ontology import load_ontology  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
DEMO = FIXTURES / "demo"
EXCERPT = FIXTURES / "icd10cm" / "icd10cm_excerpt.tsv"

_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture(scope="session")
def icd():
    return load_ontology(EXCERPT)


@pytest.fixture
def toy():
    return toy_ontology()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _acceptance.append((marker.args[0], status, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, name in sorted(_acceptance):
        terminalreporter.write_line(f"[{status}] {criterion}  ({name})")
