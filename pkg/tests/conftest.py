import pytest

from fracollapse.groundstate import solve_ground_state
from fracollapse.spectral import Grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gs_sech():
    """s = 1, N = 1, p = 1: Q = √2 sech x."""
    return solve_ground_state(1.0, 1, 1.0, Grid(1, 512, 20.0))


@pytest.fixture(scope="session")
def gs_townes():
    return solve_ground_state(1.0, 2, 1.0, Grid(2, 128, 16.0))


@pytest.fixture(scope="session")
def gs_frac():
    """Mass-critical fractional ground state, s = 0.7, N = 2."""
    return solve_ground_state(0.7, 2, 0.7, Grid(2, 128, 20.0))


@pytest.fixture(scope="session")
def gs_frac_p09():
    return solve_ground_state(0.7, 2, 0.9, Grid(2, 128, 12.0))


@pytest.fixture
def acceptance_report():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
