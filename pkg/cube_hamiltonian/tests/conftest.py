import numpy as np
import pytest

from cube_hamiltonian.dynamics import build_ulg
from cube_hamiltonian.statics import solve_static_ground
from cube_hamiltonian.types import GateTag, LatticeDims
from tests.helpers import circuit_tape


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ground_222():
    return solve_static_ground(LatticeDims(W=2, H=2, D=2))


@pytest.fixture(scope="session")
def ground_332():
    return solve_static_ground(LatticeDims(W=3, H=3, D=2))


@pytest.fixture(scope="session")
def gate_tape():
    """G then G-dagger on a three-qubit ring."""
    return circuit_tape(1, 1, [(GateTag.G, 0), (GateTag.GDAG, 2)])


@pytest.fixture(scope="session")
def gate_ulg(gate_tape):
    return build_ulg(gate_tape)
