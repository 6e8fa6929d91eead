import os

import pytest

from acceptance_registry import RESULTS


def pytest_addoption(parser):
    parser.addoption("--run-stretch", action="store_true",
                     help="run the large reproductions excluded by default")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-stretch") or os.environ.get("OBSTRUCT_STRETCH") == "1":
        return
    skip = pytest.mark.skip(reason="stretch target; use --run-stretch")
    for item in items:
        if "stretch" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        status, detail = RESULTS[num]
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {detail}")
