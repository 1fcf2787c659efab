"""Collects acceptance-criterion outcomes and prints one line per criterion at the end of the run."""

import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test covers")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "seconds": 0.0, "failed": []})
    entry["seconds"] += rep.duration
    if rep.failed or (rep.when == "call" and rep.skipped):
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        extra = f"  (failed: {', '.join(e['failed'])})" if e["failed"] else ""
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']}  [{e['seconds']:.1f}s]{extra}")
