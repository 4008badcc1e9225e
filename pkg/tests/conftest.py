import numpy as np
import pytest

from preplace.geometry import TablePlane
from preplace.grid import GridSpec


@pytest.fixture
def grid() -> GridSpec:
    return GridSpec()


@pytest.fixture
def plane() -> TablePlane:
    return TablePlane.table()


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# one verdict line per acceptance criterion, echoed after the test table
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
