import json
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

_acceptance_results = []


@pytest.fixture(scope="session")
def golden_pairs():
    with (DATA / "golden_pairs.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    # record the call outcome, or a setup failure that prevented the call
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance_results.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
