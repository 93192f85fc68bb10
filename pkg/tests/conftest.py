import sys

import pytest

from pinball.billiard import build_system, solve_orbits
from pinball.zeta import CycleWeightSpec, build_expansion


@pytest.fixture(scope="session")
def system6():
    return build_system(6.0)


@pytest.fixture(scope="session")
def system3():
    return build_system(3.0)


@pytest.fixture(scope="session")
def orbits6_12(system6):
    return solve_orbits(system6, 12)


@pytest.fixture(scope="session")
def orbits3_12(system3):
    return solve_orbits(system3, 12)


@pytest.fixture(scope="session")
def orbits6_short(orbits6_12):
    return [o for o in orbits6_12 if o.word.n <= 8]


@pytest.fixture(scope="session")
def expansion6_8(orbits6_12):
    return build_expansion(orbits6_12, CycleWeightSpec("A2", True, 0), 8)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
