import numpy as np
import pytest

from muskat.grid_spectral import ScalarField, make_grid

# Filled by tests/test_acceptance.py, printed after the run.
CRITERIA: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        title, ok, detail = CRITERIA[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")


@pytest.fixture
def grid256():
    return make_grid(256)


@pytest.fixture
def grid64():
    return make_grid(64)


def trig_field(grid, coeffs: dict) -> ScalarField:
    """``coeffs`` maps ``k`` to ``(a_k, b_k)`` for ``a cos kx + b sin kx``."""
    v = np.zeros(grid.n_points)
    for k, (a, b) in coeffs.items():
        v += a * np.cos(k * grid.x) + b * np.sin(k * grid.x)
    return ScalarField(grid, v)
