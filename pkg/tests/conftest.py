import pytest

from helpers import GRAPHS, sample_graph

_criteria: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def sample():
    return sample_graph(0.5)


@pytest.fixture
def graphs_dir():
    return GRAPHS


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    ok = report.passed if report.when == "call" else False
    prev = _criteria.get(number, (title, True))[1]
    _criteria[number] = (title, prev and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
