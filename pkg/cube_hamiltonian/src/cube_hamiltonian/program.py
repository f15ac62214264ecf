"""Program semantics on the ring register: gate G, level decoding, circuit encoding,
the su(8) generation check and the quantum ring machine."""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import yaml

from cube_hamiltonian.constants import (
    BLOCK_GATE_OFFSET,
    BLOCK_NET_SHIFT,
    GATE_GENERATOR,
    GATE_WORD_LETTERS,
    PROGRAM_BLOCKS,
    QRM_DIMENSION_LIMIT,
    RANK_REL_TOL,
    SU8_DIMENSION,
    UNITARITY_TOL,
)
from cube_hamiltonian.statics import green_constraint
from cube_hamiltonian.types import (
    CubeParams,
    DimensionOverflowError,
    GateTag,
    SpinSymbol,
    SynthesisError,
    TableFormatError,
    UniversalityReport,
    UnrealizableProgramError,
)

logger = logging.getLogger(__name__)

S = SpinSymbol
COMMUTATOR_TABLE = Path(__file__).parent / "config" / "commutators.yaml"


# The gate


@lru_cache(maxsize=1)
def _gate_g() -> np.ndarray:
    evals, evecs = scipy.linalg.eigh(GATE_GENERATOR)
    return evecs @ np.diag(np.exp(1j * evals)) @ evecs.conj().T


def gate_G() -> np.ndarray:
    """G = exp(iH) for the fixed Hermitian generator H."""
    return _gate_g().copy()


def gate_matrix(tag: GateTag) -> np.ndarray:
    if tag is GateTag.G:
        return gate_G()
    if tag is GateTag.GDAG:
        return gate_G().conj().T
    return np.eye(4, dtype=complex)


def is_unitary(matrix: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    matrix = np.asarray(matrix)
    return np.linalg.norm(matrix.conj().T @ matrix - np.eye(matrix.shape[0]), 2) <= tol


# Register tensors. Site 0 is the most significant tensor factor.


def apply_two_site(state: np.ndarray, gate: np.ndarray, a: int, b: int, n: int, d: int = 2) -> np.ndarray:
    """Apply a two-site gate to sites (a, b) of an n-site register; extra trailing axes ride along."""
    if a == b:
        raise ValueError("a two-site gate needs two distinct sites")
    state = np.asarray(state)
    tensor = state.reshape((d,) * n + state.shape[1:])
    local = np.asarray(gate).reshape(d, d, d, d)
    out = np.tensordot(local, tensor, axes=([2, 3], [a, b]))
    out = np.moveaxis(out, [0, 1], [a, b])
    return out.reshape(state.shape)


def apply_two_qubit(state: np.ndarray, gate: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    return apply_two_site(state, gate, a, b, n, d=2)


def embed_two_qubit(gate: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Full 2^n matrix of a two-qubit gate on qubits (a, b)."""
    return apply_two_qubit(np.eye(2**n, dtype=complex), gate, a, b, n)


def permute_register(state: np.ndarray, n: int, destination: Sequence[int]) -> np.ndarray:
    """Move the qubit at ring index j to ring index destination[j]."""
    state = np.asarray(state)
    tensor = state.reshape((2,) * n + state.shape[1:])
    return np.moveaxis(tensor, list(range(n)), list(destination)).reshape(state.shape)


def cycle_ring(state: np.ndarray, n: int, arrow: SpinSymbol) -> np.ndarray:
    """ArrowR sends ring index j to j+1, ArrowL sends j to j-1."""
    step = 1 if arrow is S.ARROW_R else -1
    return permute_register(state, n, [(j + step) % n for j in range(n)])


def lines_to_ring(state: np.ndarray, n: int, offset: int) -> np.ndarray:
    """Relabel a state from logical lines to ring indices when line `offset` sits at ring 0."""
    return permute_register(state, n, [(line - offset) % n for line in range(n)])


def basis_state(bits: Sequence[int]) -> np.ndarray:
    index = int("".join(str(b) for b in bits), 2) if bits else 0
    state = np.zeros(2 ** len(bits), dtype=complex)
    state[index] = 1.0
    return state


# Level decoding


def opposite(arrow: SpinSymbol) -> SpinSymbol:
    return S.ARROW_L if arrow is S.ARROW_R else S.ARROW_R


@dataclass(frozen=True)
class EdgeAction:
    arrival: SpinSymbol
    pair: Tuple[int, int]
    green: SpinSymbol
    gate: Optional[GateTag]
    exit: SpinSymbol


@dataclass(frozen=True)
class LevelStep:
    cycle: SpinSymbol
    action: Optional[EdgeAction]


def edge_action(arrival: SpinSymbol, p_i: int, p_next: int) -> EdgeAction:
    """What the head does at the computation edge for the program pair (p_i, p_next)."""
    green = green_constraint(p_i, p_next)
    if green is S.B:
        return EdgeAction(arrival, (p_i, p_next), green, None, opposite(arrival))
    if green is S.C:
        return EdgeAction(arrival, (p_i, p_next), green, None, arrival)
    gate = GateTag.G if arrival is S.ARROW_L else GateTag.GDAG
    return EdgeAction(arrival, (p_i, p_next), green, gate, arrival)


def _program_bits(program: str) -> List[int]:
    if not program or set(program) - {"0", "1"}:
        raise ValueError(f"program must be a non-empty bit string, got {program!r}")
    return [int(c) for c in program]


def decode_program(program: str, incoming: SpinSymbol = S.ARROW_R, levels: Optional[int] = None) -> List[LevelStep]:
    """Per-level cycle direction and edge action; the program repeats with period len(program)."""
    bits = _program_bits(program)
    period = len(bits)
    levels = period if levels is None else levels
    state = incoming
    steps = []
    for i in range(levels):
        action = edge_action(state, bits[i % period], bits[(i + 1) % period]) if i + 1 < levels else None
        steps.append(LevelStep(state, action))
        if action is not None:
            state = action.exit
    return steps


def simulate_ring(program: str, n: int, input_state: np.ndarray, levels: Optional[int] = None) -> np.ndarray:
    """Evolve an n-qubit ring state through every level of the program."""
    if n < 3:
        raise ValueError("the ring needs at least three qubits")
    state = np.asarray(input_state, dtype=complex)
    if state.shape[0] != 2**n:
        raise ValueError(f"state of dimension {state.shape[0]} does not fit {n} qubits")
    for step in decode_program(program, levels=levels):
        state = cycle_ring(state, n, step.cycle)
        if step.action is not None and step.action.gate is not None:
            state = apply_two_qubit(state, gate_matrix(step.action.gate), 0, 1, n)
    return state


# Circuits in the line frame


@dataclass(frozen=True)
class GateOp:
    """A two-qubit gate on logical lines (offset, offset + 1)."""

    gate: GateTag
    offset: int


@dataclass(frozen=True)
class ProgramTrace:
    ops: Tuple[GateOp, ...]
    final_offset: int
    final_arrow: SpinSymbol


def circuit_from_program(program: str, n: int, levels: Optional[int] = None) -> ProgramTrace:
    """Line-frame circuit a program performs; line `offset` is the one sitting at ring index 0."""
    offset = 0
    ops = []
    arrow = S.ARROW_R
    for step in decode_program(program, levels=levels):
        offset += -1 if step.cycle is S.ARROW_R else 1
        arrow = step.cycle
        if step.action is not None:
            arrow = step.action.exit
            if step.action.gate is not None:
                ops.append(GateOp(step.action.gate, offset % n))
    return ProgramTrace(tuple(ops), offset % n, arrow)


def encode_circuit(ops: Iterable[Tuple[GateTag, int]], n: int) -> str:
    """Program string applying each (gate, k) to lines (k, k+1 mod n) in order."""
    if n < 3:
        raise ValueError("the ring needs at least three qubits")
    blocks: List[str] = []
    offset = 0
    for op in ops:
        gate, k = (op.gate, op.offset) if isinstance(op, GateOp) else op
        gate = GateTag(gate)
        if gate is GateTag.IDENTITY:
            continue
        target = k % n
        delta = (target - offset) % n
        blocks += ["U"] * delta if delta <= n // 2 else ["D"] * (n - delta)
        blocks += ["D", "G", "D"] if gate is GateTag.G else ["U", "U", "I"]
        offset = target
    if not blocks:
        blocks = ["S"]
    shift = sum(BLOCK_NET_SHIFT[b] for b in blocks)
    logger.debug("encoded %d block(s), net offset shift %d", len(blocks), shift)
    return "0" + "".join(PROGRAM_BLOCKS[b] for b in blocks)


def block_gate_positions(blocks: Sequence[str], n: int) -> List[GateOp]:
    """Gates placed by a block sequence, from the per-block offset bookkeeping alone."""
    offset = 0
    ops = []
    for block in blocks:
        if block in BLOCK_GATE_OFFSET:
            tag = GateTag.G if block == "G" else GateTag.GDAG
            ops.append(GateOp(tag, (offset + BLOCK_GATE_OFFSET[block]) % n))
        offset += BLOCK_NET_SHIFT[block]
    return ops


def apply_circuit(ops: Iterable[GateOp], n: int, state: np.ndarray) -> np.ndarray:
    """Apply line-frame gates in order."""
    state = np.asarray(state, dtype=complex)
    for op in ops:
        state = apply_two_qubit(state, gate_matrix(op.gate), op.offset % n, (op.offset + 1) % n, n)
    return state


# Lie closure of the two placements of H on three qubits


@dataclass(frozen=True)
class CommutatorEntry:
    """H_j := i [H_r, H_c]."""

    j: int
    r: int
    c: int


def load_commutator_table(path: Optional[Union[str, Path]] = None) -> List[CommutatorEntry]:
    path = Path(path) if path is not None else COMMUTATOR_TABLE
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise TableFormatError(f"cannot read commutator table {path}: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("rows"), dict):
        raise TableFormatError("commutator table needs a 'rows' mapping")

    entries = []
    for r, row in raw["rows"].items():
        if not isinstance(row, dict):
            raise TableFormatError(f"row {r} is not a mapping")
        for c, j in row.items():
            if not all(isinstance(v, int) for v in (r, c, j)):
                raise TableFormatError(f"non-integer entry {r}/{c}/{j}")
            if not (r < j and c < j) or r == c:
                raise TableFormatError(f"H_{j} must be built from two distinct earlier elements, got ({r}, {c})")
            entries.append(CommutatorEntry(j, r, c))

    produced = sorted(e.j for e in entries)
    expected = list(range(3, SU8_DIMENSION + 1))
    if produced != expected:
        missing = sorted(set(expected) - set(produced))
        repeated = sorted({j for j in produced if produced.count(j) > 1})
        raise TableFormatError(f"table must define each of H_3..H_{SU8_DIMENSION} once; missing {missing}, repeated {repeated}")
    return sorted(entries, key=lambda e: e.j)


def _normalize(matrix: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(matrix)
    if norm == 0:
        raise TableFormatError("commutator table produced a zero element")
    return matrix / norm


def _traceless(matrix: np.ndarray) -> np.ndarray:
    return matrix - np.trace(matrix) / matrix.shape[0] * np.eye(matrix.shape[0])


def generate_lie_elements(entries: Sequence[CommutatorEntry]) -> Dict[int, np.ndarray]:
    """H_1, H_2 and every tabulated nested commutator, each with unit Frobenius norm."""
    h = _traceless(GATE_GENERATOR)
    eye = np.eye(2, dtype=complex)
    elements = {1: _normalize(_traceless(np.kron(h, eye))), 2: _normalize(_traceless(np.kron(eye, h)))}
    for entry in entries:
        a, b = elements[entry.r], elements[entry.c]
        elements[entry.j] = _normalize(1j * (a @ b - b @ a))
    return elements


def _real_coordinates(matrix: np.ndarray) -> np.ndarray:
    upper = np.triu_indices(matrix.shape[0], k=1)
    return np.concatenate([np.real(np.diag(matrix)), np.real(matrix[upper]), np.imag(matrix[upper])])


def check_universality(
    entries: Optional[Sequence[CommutatorEntry]] = None, rel_tol: float = RANK_REL_TOL
) -> UniversalityReport:
    """Rank of the 63 generated elements as real vectors; full rank means they span su(8)."""
    entries = load_commutator_table() if entries is None else entries
    eye = np.eye(2, dtype=complex)
    raw = [np.trace(np.kron(GATE_GENERATOR, eye)), np.trace(np.kron(eye, GATE_GENERATOR))]
    logger.info("H_1, H_2 traces before projection: %s", ", ".join(f"{t.real:g}" for t in raw))
    elements = generate_lie_elements(entries)
    ordered = [elements[j] for j in sorted(elements)]
    hermitian = max(np.linalg.norm(m - m.conj().T) for m in ordered)
    trace = max(abs(np.trace(m)) for m in ordered)

    matrix = np.array([_real_coordinates(m) for m in ordered])
    singular = np.linalg.svd(matrix, compute_uv=False)
    rank = int(np.sum(singular > rel_tol * singular[0]))

    table = {e.j: e for e in entries}
    if 42 in table and table[42].r == 11 and table[42].c == 5:
        h11, h5 = elements[11], elements[5]
        spot = float(np.linalg.norm(elements[42] - _normalize(1j * (h11 @ h5 - h5 @ h11))))
    else:
        spot = float("inf")

    passed = rank == SU8_DIMENSION and len(ordered) == SU8_DIMENSION
    logger.info("su(8) generation: rank %d of %d", rank, SU8_DIMENSION)
    return UniversalityReport(
        rank=rank,
        independent_count=rank,
        dimension=SU8_DIMENSION,
        passed=passed,
        max_hermitian_residual=float(hermitian),
        max_trace_residual=float(trace),
        raw_generator_traces=[float(abs(t)) for t in raw],
        spot_check_residual=spot,
    )


# Gate words and brute-force synthesis on three qubits


GateWord = Tuple[str, ...]


def parse_gate_word(text: str) -> GateWord:
    letters = tuple(p.strip() for p in text.split(",") if p.strip())
    unknown = [p for p in letters if p not in GATE_WORD_LETTERS]
    if unknown:
        raise ValueError(f"unknown gate letters {unknown}; expected {GATE_WORD_LETTERS}")
    return letters


def _letter_unitary(letter: str, n: int) -> np.ndarray:
    eye = np.eye(2**n, dtype=complex)
    if letter == "G":
        return embed_two_qubit(gate_G(), 0, 1, n)
    if letter == "Gd":
        return embed_two_qubit(gate_G().conj().T, 0, 1, n)
    if letter == "CW":
        return cycle_ring(eye, n, S.ARROW_R)
    return cycle_ring(eye, n, S.ARROW_L)


def word_unitary(word: Sequence[str], n: int = 3) -> np.ndarray:
    """Unitary of a gate word in the ring frame; the first letter acts first."""
    unitary = np.eye(2**n, dtype=complex)
    for letter in word:
        unitary = _letter_unitary(letter, n) @ unitary
    return unitary


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Operator-norm distance between u and v up to a global phase."""
    overlap = np.trace(v.conj().T @ u)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.linalg.norm(u - phase * v, 2))


def _phase_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
    return (np.round(u * (abs(pivot) / pivot), 9) + 0.0).tobytes()


@dataclass(frozen=True)
class SynthesisResult:
    word: GateWord
    distance: float


def synthesize(target: np.ndarray, epsilon: float, max_len: int, n: int = 3) -> SynthesisResult:
    """Shortest word over {G, Gd, CW, CCW} within `epsilon` of the target, breadth first.

    A 4x4 target is placed on ring indices (0, 1).
    """
    target = np.asarray(target, dtype=complex)
    if target.shape == (4, 4) and n != 2:
        target = embed_two_qubit(target, 0, 1, n)
    if target.shape != (2**n, 2**n):
        raise ValueError(f"target of shape {target.shape} does not act on {n} qubits")

    letters = {letter: _letter_unitary(letter, n) for letter in GATE_WORD_LETTERS}
    identity = np.eye(2**n, dtype=complex)
    best = SynthesisResult((), phase_distance(target, identity))
    if best.distance <= epsilon:
        return best

    seen = {_phase_key(identity)}
    frontier: List[Tuple[GateWord, np.ndarray]] = [((), identity)]
    for length in range(1, max_len + 1):
        next_frontier = []
        for word, unitary in frontier:
            for letter in GATE_WORD_LETTERS:
                candidate = letters[letter] @ unitary
                key = _phase_key(candidate)
                if key in seen:
                    continue
                seen.add(key)
                extended = word + (letter,)
                distance = phase_distance(target, candidate)
                if distance < best.distance:
                    best = SynthesisResult(extended, distance)
                if distance <= epsilon:
                    logger.info("synthesized target with %d letter(s)", length)
                    return SynthesisResult(extended, distance)
                next_frontier.append((extended, candidate))
        frontier = next_frontier
        logger.debug("synthesis depth %d: %d new unitaries", length, len(frontier))
    raise SynthesisError(f"no word of length <= {max_len} within {epsilon}", best.distance, list(best.word))


# Quantum ring machine


def _check_qrm_size(d: int, n: int) -> None:
    if d < 2 or n < 2:
        raise ValueError("the ring machine needs d >= 2 and n >= 2")
    if d**n > QRM_DIMENSION_LIMIT:
        raise DimensionOverflowError(f"{n} qudits of dimension {d} exceed the {QRM_DIMENSION_LIMIT} state limit")


def qrm_round_circuit(R: np.ndarray, d: int, n: int) -> np.ndarray:
    """Unitary of one full round: R on (k, k+1 mod n) for k = 0..n-1."""
    _check_qrm_size(d, n)
    unitary = np.eye(d**n, dtype=complex)
    for k in range(n):
        unitary = apply_two_site(unitary, R, k, (k + 1) % n, n, d)
    return unitary


def simulate_qrm(R: np.ndarray, d: int, n: int, steps: int, input_state: np.ndarray) -> np.ndarray:
    """Apply R to (k mod n, k+1 mod n) for k = 0..steps-1."""
    _check_qrm_size(d, n)
    R = np.asarray(R, dtype=complex)
    if R.shape != (d * d, d * d):
        raise ValueError(f"R must be {d * d}x{d * d}")
    state = np.asarray(input_state, dtype=complex)
    for k in range(steps):
        state = apply_two_site(state, R, k % n, (k + 1) % n, n, d)
    return state


def cube_parameters(program: str, d: int, t: int, qudits: int = 2) -> CubeParams:
    """Cube dimensions whose counter writes `program` and whose ring holds the machine.

    W is the program length. D is the smallest value in the counter's preimage of
    the program that also makes the ring large enough and W + D a multiple of the
    qubit block.
    """
    bits = _program_bits(program)
    if d < 2 or t < 1:
        raise ValueError("need d >= 2 and t >= 1")
    W = len(bits)
    m = math.ceil(math.log2(d))
    qubits_needed = qudits * m
    ring_need = math.ceil((qubits_needed + 1) / 2)
    period = 2**W
    base = int(program, 2) or period

    gcd = math.gcd(period, m)
    if (-(W + base)) % gcd != 0:
        raise UnrealizableProgramError(
            f"program {program!r} is only written by D = {base} mod {period}, "
            f"which never makes W + D a multiple of {m}"
        )
    for k in itertools.count():
        D = base + k * period
        if D >= 2 and W + D >= ring_need and (W + D) % m == 0:
            break
    H = 2 * t * (W + D)
    logger.info("program %s: W=%d H=%d D=%d, block %d", program, W, H, D, m)
    return CubeParams(W=W, H=H, D=D, ring_size=W + D, qubit_block=m, qrm_steps=t, qubits_needed=qubits_needed)
