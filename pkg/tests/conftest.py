import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, desc): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, desc = mark.args
    entry = _OUTCOMES.setdefault(n, {"desc": desc, "ok": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        e = _OUTCOMES[n]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {n:>2} {verdict}: {e['desc']} ({e['tests']} tests)")
