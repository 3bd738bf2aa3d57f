import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPORT = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the long solves (101^3 grid)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or os.environ.get("WTE_REACH_LONG", "") not in ("", "0"):
        return
    skip = pytest.mark.skip(reason="long solve; use --runslow or WTE_REACH_LONG=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion():
    """Record one pass/fail line; the line is also printed in the terminal summary."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        REPORT.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
