import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion id and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    key, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _RESULTS.append((key, title, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, title, outcome, detail in sorted(_RESULTS, key=lambda r: r[0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"[{status}] {key:<4} {title}" + (f" | {detail}" if detail else ""))
