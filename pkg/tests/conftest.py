import numpy as np
import pytest

from quadwell.dipole import decompose
from quadwell.well import WellParams, solve_levels


@pytest.fixture(scope="session")
def sym_params():
    return WellParams(m=1.0, k1=1.0, k2=1.0, hbar=1.0)


@pytest.fixture(scope="session")
def asym_params():
    return WellParams(m=1.0, k1=1.0, k2=4.0, hbar=1.0)


@pytest.fixture(scope="session")
def sym_basis(sym_params):
    return solve_levels(sym_params, 8)


@pytest.fixture(scope="session")
def asym_basis(asym_params):
    return solve_levels(asym_params, 8)


@pytest.fixture(scope="session")
def sym_dip(sym_basis):
    return decompose(sym_basis)


@pytest.fixture(scope="session")
def asym_dip(asym_basis):
    return decompose(asym_basis)


@pytest.fixture(scope="session")
def asym_dip4(asym_basis):
    return decompose(asym_basis, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
