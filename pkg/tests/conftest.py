import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    number, name = marker.args
    if report.when != "call" and report.passed:
        return
    if _ACCEPTANCE.get(number, (None, None))[1] == "FAIL":
        return  # keep the first failing phase
    status = "FAIL" if report.failed else "SKIP" if report.skipped else "PASS"
    _ACCEPTANCE[number] = (name, status, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        name, status, duration = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{status}  [{number:2d}] {name} ({duration:.1f} s)")
