"""Shared fixtures: the default ground state is solved once per session."""
from __future__ import annotations

import pytest

from choquard_lab.groundstate import find_groundstate
from choquard_lab.radial_core import make_log_grid

DEFAULT_R_MIN = 1e-6
DEFAULT_R_MAX = 110.0
DEFAULT_N = 4096

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return make_log_grid(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_N)


@pytest.fixture(scope="session")
def gs(grid):
    return find_groundstate(1.0, grid)


@pytest.fixture(scope="session")
def gs_fine():
    """Same instance with the log step halved (``n - 1`` doubled)."""
    return find_groundstate(1.0, make_log_grid(DEFAULT_R_MIN, DEFAULT_R_MAX, 2 * DEFAULT_N - 1))


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
