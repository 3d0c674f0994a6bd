import numpy as np
import pytest

from edrlab.hilbert import StateVector
from edrlab.models import (
    GridConfig,
    build_cnot_model,
    build_identity_model,
    build_von_neumann_model,
    gaussian_state,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

PLUS = StateVector([1, 1])
SY_PLUS = StateVector([1, 1j])

# grid used by the acceptance criteria
ACCEPT_GRID = GridConfig(n_points=128, half_width=8.0, hbar=1.0)
# smallest grid that still satisfies the probe preconditions for s = 1; small
# enough (joint dimension 2048) to densify the coupling
SMALL_GRID = GridConfig(n_points=32, half_width=8.0, hbar=1.0)


@pytest.fixture
def cnot():
    return build_cnot_model()


@pytest.fixture
def ident():
    return build_identity_model()


@pytest.fixture(scope="session")
def vn():
    return build_von_neumann_model(ACCEPT_GRID, probe_width=1.0)


@pytest.fixture(scope="session")
def vn_phi():
    return gaussian_state(ACCEPT_GRID.positions, 0.0, 1.0)


@pytest.fixture(scope="session")
def vn_small():
    return build_von_neumann_model(SMALL_GRID, probe_width=1.0)


@pytest.fixture(scope="session")
def vn_small_phi():
    return gaussian_state(SMALL_GRID.positions, 0.0, 1.0)


@pytest.fixture(scope="session")
def vn_small_dense_u(vn_small):
    return vn_small.U.to_operator()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
