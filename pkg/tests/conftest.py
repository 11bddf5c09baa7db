import sys
from pathlib import Path

import pytest

from adaptube.registry import heisenberg, sphere
from adaptube.tube import build_tube_by_flow, build_tube_closed_form

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def heis():
    return heisenberg(1)


@pytest.fixture(scope="session")
def sph():
    return sphere(1)


@pytest.fixture(scope="session")
def heis_tube():
    return build_tube_closed_form("heisenberg", 1)


@pytest.fixture(scope="session")
def sph_tube():
    return build_tube_closed_form("sphere", 1)


@pytest.fixture(scope="session")
def heis_flow(heis):
    return build_tube_by_flow(heis, 0.5)


@pytest.fixture(scope="session")
def sph_flow(sph):
    return build_tube_by_flow(sph, 0.3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
