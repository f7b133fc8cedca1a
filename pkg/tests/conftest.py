import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by a test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when not in ("setup", "call"):
        return
    number, title = marker.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
