"""Acceptance-criteria bookkeeping.

Tests tagged ``@pytest.mark.acceptance(num, title)`` are rolled up into
one PASS/FAIL line per numbered criterion at the end of the run, so the
release gate is readable without scrolling through the node list.
Several tests may share a criterion number; the criterion passes only
when every one of them passed.
"""

import pytest

_CRITERIA: dict[int, dict] = {}
_DETAILS: dict[int, str] = {}


def _record_detail(num: int, text: str) -> None:
    _DETAILS[num] = text


@pytest.fixture
def criterion_detail():
    """Callable (num, text) for measured numbers in the summary table."""
    return _record_detail


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(num, title): roll this test into numbered "
        "acceptance-criterion reporting",
    )


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is None:
            continue
        num, title = mark.args
        crit = _CRITERIA.setdefault(int(num), {"title": title, "nodes": {}})
        crit["nodes"][item.nodeid] = "pending"


def pytest_runtest_logreport(report):
    for crit in _CRITERIA.values():
        state = crit["nodes"].get(report.nodeid)
        if state is None:
            continue
        if report.failed:
            crit["nodes"][report.nodeid] = "failed"
        elif report.skipped:
            crit["nodes"][report.nodeid] = "skipped"
        elif report.when == "call" and state == "pending":
            crit["nodes"][report.nodeid] = "passed"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        crit = _CRITERIA[num]
        states = set(crit["nodes"].values())
        status = "PASS" if states == {"passed"} else "FAIL"
        line = f"[{status}] {num}. {crit['title']}"
        if num in _DETAILS:
            line += f"  [{_DETAILS[num]}]"
        terminalreporter.write_line(line)
