"""Per-criterion pass/fail summary for the acceptance suite.

Acceptance tests carry ``@pytest.mark.criterion(n)``.  A criterion passes
when every test tagged with it passes.
"""
from collections import defaultdict

import pytest

N_CRITERIA = 12
_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[mark.args[0]].append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        results = _outcomes.get(n)
        if not results:
            terminalreporter.write_line(f"CRITERION {n:2d}: NOT RUN")
            continue
        failed = [name for name, ok in results if not ok]
        status = "FAIL" if failed else "PASS"
        detail = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"CRITERION {n:2d}: {status}{detail}")
