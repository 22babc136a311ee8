"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_outcomes = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    key, title = mark.args
    entry = _outcomes.setdefault(key, {"title": title, "failed": [], "details": []})
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["failed"].append(item.name)
    if call.when == "call":
        entry["details"] += [f"{k}={v}" for k, v in item.user_properties]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_outcomes, key=lambda k: int(k[1:])):
        e = _outcomes[key]
        status = "FAIL" if e["failed"] else "PASS"
        tr.write_line(f"{status} {key}: {e['title']}")
        for d in e["details"]:
            tr.write_line(f"       {d}")
        for name in e["failed"]:
            tr.write_line(f"       failed: {name}")
