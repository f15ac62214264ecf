import numpy as np

from cube_hamiltonian.dynamics import EdgeTape, forward_walk, register_ring_order
from cube_hamiltonian.program import apply_two_qubit, encode_circuit, gate_matrix, permute_register
from cube_hamiltonian.types import GateTag, LatticeDims


def circuit_tape(W: int, D: int, circuit) -> EdgeTape:
    """Tape whose height is the encoded program length."""
    n = 2 * (W + D) - 1
    program = encode_circuit(circuit, n)
    return EdgeTape.from_program(LatticeDims(W=W, H=len(program), D=D), program)


def random_state(q: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2**q) + 1j * rng.normal(size=2**q)
    return psi / np.linalg.norm(psi)


def walk_ring_state(tape: EdgeTape, input_state: np.ndarray) -> np.ndarray:
    """Register at the end of the forward walk, with tensor factor j at ring index j."""
    n = tape.ring_size
    state = np.asarray(input_state, dtype=complex)
    walk = forward_walk(tape)
    for transition in walk:
        if transition.tag is not GateTag.IDENTITY:
            a, b = transition.slots
            state = apply_two_qubit(state, gate_matrix(transition.tag), a, b, n)
    destination = [0] * n
    for j, slot in enumerate(register_ring_order(walk[-1].target)):
        destination[slot] = j
    return permute_register(state, n, destination)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)
