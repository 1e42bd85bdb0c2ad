import pytest
from hypothesis import settings

from msmaxmin.model import Horizon, Instance

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


def inst(t, table):
    """``table`` maps entity -> {player: value}; every listed player is allowed."""
    allowed = {e: set(row) for e, row in table.items()}
    values = {(e, p): v for e, row in table.items() for p, v in row.items()}
    return Instance(t, allowed, values)


def horizon(players, entities, delta, tables):
    return Horizon(tuple(players), tuple(entities), delta, tuple(inst(t, tb) for t, tb in enumerate(tables, start=1)))


def lists_window(a, lists):
    """Window of instances from restriction lists only (all values 0)."""
    return [Instance(a + k, {"e": set(ps)}) for k, ps in enumerate(lists)]


@pytest.fixture
def two_by_two():
    return horizon(
        ["p1", "p2"], ["e1", "e2"], 2,
        [
            {"e1": {"p1": 3, "p2": 1}, "e2": {"p2": 2}},
            {"e1": {"p1": 1}, "e2": {"p1": 2, "p2": 2}},
            {"e1": {"p1": 2, "p2": 4}, "e2": {"p2": 1}},
        ],
    )


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown" or (rep.when == "setup" and rep.passed):
        return
    number, title = mark.args
    _criteria[number] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}")
