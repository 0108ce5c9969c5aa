"""Per-criterion reporting for the acceptance suite.

Tests in ``test_acceptance.py`` carry ``@pytest.mark.criterion(k, "title")``.
A criterion passes when every test tagged with it passes; an expected failure
counts as a failing criterion. One line per criterion is printed at the end.
"""

from collections import OrderedDict

import pytest

_TITLES: dict[int, str] = {}
_OUTCOMES: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            k, title = mark.args
            _TITLES[k] = title
            item.user_properties.append(("criterion", k))


def _criterion(report):
    for key, value in report.user_properties:
        if key == "criterion":
            return value
    return None


def pytest_runtest_logreport(report):
    k = _criterion(report)
    if k is None:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if hasattr(report, "wasxfail"):
            outcome = "xfail"
        elif report.passed:
            outcome = "pass"
        elif report.skipped:
            outcome = "skip"
        else:
            outcome = "fail"
        _OUTCOMES.setdefault(k, []).append((name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(OrderedDict.fromkeys(_TITLES)):
        results = _OUTCOMES.get(k)
        if not results:
            continue
        bad = [f"{name} ({outcome})" for name, outcome in results if outcome != "pass"]
        status = "PASS" if not bad else "FAIL"
        line = f"[{status}] criterion {k:2d}: {_TITLES[k]}"
        if bad:
            line += "; not met: " + ", ".join(bad)
        tr.write_line(line)
