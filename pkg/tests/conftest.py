import time

import pytest

from fockinterf.cli import figure_csv

_REPORT = []
_FIGURES = {}


@pytest.fixture
def report():
    """Collects one summary line per acceptance criterion."""

    def add(line):
        _REPORT.append(line)
        print(line)

    return add


@pytest.fixture(scope="session")
def figure_output():
    """Generated CSV text and runtime per built-in figure, computed once."""

    def get(name):
        if name not in _FIGURES:
            start = time.perf_counter()
            text = figure_csv(name)
            _FIGURES[name] = (text, time.perf_counter() - start)
        return _FIGURES[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
