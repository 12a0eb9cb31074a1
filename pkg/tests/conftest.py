import math

import pytest

from sarmanov_ruin import Pareto, SarmanovModel, TwoAtom, Uniform01

# criterion lines collected by test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def pareto2():
    return Pareto(2.0, 1.0)


@pytest.fixture(scope="session")
def uniform():
    return Uniform01()


@pytest.fixture(scope="session")
def fgm_half(pareto2, uniform):
    return SarmanovModel.fgm(pareto2, uniform, 0.5)


@pytest.fixture(scope="session")
def independent(pareto2, uniform):
    return SarmanovModel.fgm(pareto2, uniform, 0.0)


@pytest.fixture(scope="session")
def vanishing_two_atom():
    p1 = math.e ** 2 / (1 + math.e ** 2)
    return TwoAtom(1.0, p1, math.e)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
