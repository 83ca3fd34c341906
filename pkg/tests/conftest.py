import numpy as np
import pytest

from dispersive_lab.multiplier_ops import DispersionFamily
from dispersive_lab.spectral_core import Grid, mean_zero_project

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def pi_grid():
    # L = pi puts integer wavenumbers on the lattice
    return Grid(64, np.pi)


@pytest.fixture(scope="session")
def evo_grid():
    return Grid(1024, 16 * np.pi)


@pytest.fixture(scope="session")
def sech_datum(evo_grid):
    return mean_zero_project(evo_grid.from_function(lambda x: 1.0 / np.cosh(x) ** 2))


@pytest.fixture
def rmbo():
    return DispersionFamily.rmbo(1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
