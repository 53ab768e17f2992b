from pathlib import Path

import pytest

import baac
from baac.lang.parser import parse_theory
from baac.problem import Problem, State

DOMAINS = Path(baac.__file__).parent / "domains"


def load(name):
    return parse_theory((DOMAINS / name).read_text())


@pytest.fixture(scope="session")
def guitar_maker():
    return load("guitar_maker.baac")


@pytest.fixture
def seq_f():
    # v0(f) = 5, v1(f) = 7
    return [State({"f": 5, "g": 0}), State({"f": 7, "g": 0})]


def theory(text):
    return parse_theory(text)


def problem(*texts):
    return Problem([parse_theory(t) for t in texts])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
