"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    k, title = mark.args[0], mark.args[1]
    entry = _OUTCOMES.setdefault(k, {"title": title, "passed": 0, "failed": []})
    if rep.failed:
        entry["failed"].append(item.name)
    elif rep.when == "call" and rep.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        e = _OUTCOMES[k]
        status = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {k}: {status} ({e['passed']} passed, {len(e['failed'])} failed) {e['title']}"
        if e["failed"]:
            line += f" [failing: {', '.join(e['failed'])}]"
        terminalreporter.write_line(line)
