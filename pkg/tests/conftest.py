"""Shared ground states and constants; each solve runs once per session."""
import numpy as np
import pytest

from critsys.bubble import closed_form_symmetric, solve_ground_state
from critsys.constants import energy_constants
from critsys.hyperbola import classify


@pytest.fixture(scope="session")
def sym4():
    """Shooting solution for N=4, p=q=3."""
    return solve_ground_state(classify(4, 3.0, 3.0))


@pytest.fixture(scope="session")
def exact4():
    """Closed-form bubble for N=4, p=q=3."""
    return closed_form_symmetric(4)


@pytest.fixture(scope="session")
def asym5():
    """(5, 11/4, 2): q above N/(N-2)."""
    return solve_ground_state(classify(5, 2.75, 2.0))


@pytest.fixture(scope="session")
def below5():
    """(5, 4, 3/2): q below N/(N-2)."""
    return solve_ground_state(classify(5, 4.0, 1.5))


@pytest.fixture(scope="session")
def ec_exact4(exact4):
    return energy_constants(exact4)


@pytest.fixture(scope="session")
def ec_asym5(asym5):
    return energy_constants(asym5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance PASS/FAIL lines collected by test_acceptance.py."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
