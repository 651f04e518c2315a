import numpy as np
import pytest

_acceptance = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        if hasattr(rep, "wasxfail"):
            status = "FAIL"
        _acceptance.append((mark.args[0], status, mark.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title in sorted(_acceptance, key=lambda r: int(r[0])):
        terminalreporter.write_line(f"{status}  [{number:>2}] {title}")
