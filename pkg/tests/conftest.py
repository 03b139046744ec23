from pathlib import Path

import pytest

from mock_judge import MockJudge

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def mock_judge():
    judge = MockJudge().start()
    yield judge
    judge.stop()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, text): acceptance criterion this test certifies")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        item.config._criteria.append((marker.args[0], marker.args[1], rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not config._criteria:
        return
    terminalreporter.section("acceptance criteria")
    grouped: dict = {}
    for num, text, outcome, duration in config._criteria:
        entry = grouped.setdefault(num, [text, True, 0.0])
        entry[1] = entry[1] and outcome == "passed"
        entry[2] += duration
    for num, (text, ok, duration) in sorted(grouped.items()):
        terminalreporter.write_line(f"AC{num} {'PASS' if ok else 'FAIL'} ({duration:.2f}s): {text}")
