import numpy as np
import pytest

from cube_hamiltonian.program import (
    GateOp,
    apply_circuit,
    basis_state,
    block_gate_positions,
    check_universality,
    circuit_from_program,
    cube_parameters,
    cycle_ring,
    decode_program,
    edge_action,
    embed_two_qubit,
    encode_circuit,
    gate_G,
    gate_matrix,
    is_unitary,
    lines_to_ring,
    load_commutator_table,
    parse_gate_word,
    qrm_round_circuit,
    simulate_qrm,
    simulate_ring,
    synthesize,
    word_unitary,
)
from cube_hamiltonian.statics import counter_front_string
from cube_hamiltonian.types import (
    DimensionOverflowError,
    GateTag,
    LatticeDims,
    SpinSymbol,
    SynthesisError,
    TableFormatError,
    UnrealizableProgramError,
)
from tests.helpers import random_state

S = SpinSymbol
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def test_gate_is_unitary_and_not_trivial():
    g = gate_G()
    assert g.shape == (4, 4)
    assert is_unitary(g)
    assert np.allclose(gate_matrix(GateTag.GDAG), g.conj().T)
    assert np.allclose(gate_matrix(GateTag.IDENTITY), np.eye(4))
    assert not np.allclose(g, g[0, 0] * np.eye(4))


def test_edge_actions():
    turn = edge_action(S.ARROW_R, 0, 0)
    assert turn.green is S.B and turn.gate is None and turn.exit is S.ARROW_L
    keep = edge_action(S.ARROW_L, 0, 1)
    assert keep.green is S.C and keep.gate is None and keep.exit is S.ARROW_L
    assert edge_action(S.ARROW_L, 1, 1).gate is GateTag.G
    assert edge_action(S.ARROW_R, 1, 1).gate is GateTag.GDAG
    assert edge_action(S.ARROW_R, 1, 1).exit is S.ARROW_R


def test_decode_program_walks_the_levels():
    steps = decode_program("0001")
    assert [s.cycle for s in steps] == [S.ARROW_R, S.ARROW_L, S.ARROW_R, S.ARROW_R]
    assert [s.action.green for s in steps[:-1]] == [S.B, S.B, S.C]
    assert steps[-1].action is None


def test_program_must_be_bits():
    with pytest.raises(ValueError):
        decode_program("01x")
    with pytest.raises(ValueError):
        decode_program("")


def test_cycle_ring_moves_basis_states():
    state = basis_state([1, 0, 0])
    assert np.allclose(cycle_ring(state, 3, S.ARROW_R), basis_state([0, 1, 0]))
    assert np.allclose(cycle_ring(state, 3, S.ARROW_L), basis_state([0, 0, 1]))


def test_empty_circuit_encodes_to_the_idle_program():
    assert encode_circuit([], 3) == "000"
    assert circuit_from_program("000", 3).ops == ()


def test_block_bookkeeping():
    assert block_gate_positions(["U", "D", "G", "D"], 3) == [GateOp(GateTag.G, 1)]
    assert block_gate_positions(["U", "U", "I"], 5) == [GateOp(GateTag.GDAG, 0)]
    # UIU lands G-dagger one line to the left
    assert block_gate_positions(["U", "I", "U"], 5) == [GateOp(GateTag.GDAG, 4)]


CIRCUITS = [
    (3, [(GateTag.G, 1)]),
    (3, [(GateTag.G, 0), (GateTag.GDAG, 2)]),
    (5, [(GateTag.GDAG, 3), (GateTag.G, 1)]),
    (5, [(GateTag.G, 4), (GateTag.G, 4), (GateTag.GDAG, 0)]),
]


@pytest.mark.parametrize("n,circuit", CIRCUITS)
def test_codec_round_trip(n, circuit):
    program = encode_circuit(circuit, n)
    assert program[0] == "0"
    trace = circuit_from_program(program, n)
    assert trace.ops == tuple(GateOp(g, k % n) for g, k in circuit)


@pytest.mark.parametrize("n,circuit", CIRCUITS)
def test_ring_simulation_matches_line_circuit(n, circuit, rng):
    program = encode_circuit(circuit, n)
    trace = circuit_from_program(program, n)
    psi = random_state(n, rng)
    expected = lines_to_ring(apply_circuit(trace.ops, n, psi), n, trace.final_offset)
    assert np.allclose(simulate_ring(program, n, psi), expected, atol=1e-10)


def test_random_circuits_round_trip():
    rng = np.random.default_rng(99)
    for _ in range(20):
        n = int(rng.choice([3, 5]))
        circuit = [(GateTag.G if rng.random() < 0.5 else GateTag.GDAG, int(rng.integers(n))) for _ in range(rng.integers(1, 9))]
        trace = circuit_from_program(encode_circuit(circuit, n), n)
        assert trace.ops == tuple(GateOp(g, k) for g, k in circuit)


def test_commutator_table_shape():
    entries = load_commutator_table()
    assert [e.j for e in entries] == list(range(3, 64))
    assert all(e.r < e.j and e.c < e.j for e in entries)


def test_universality_rank():
    report = check_universality()
    assert report.rank == 63
    assert report.passed
    assert report.max_hermitian_residual <= 1e-12
    assert report.max_trace_residual <= 1e-12
    assert report.spot_check_residual <= 1e-12


def test_universality_reports_generator_traces_before_projection():
    report = check_universality()
    # G has trace 1, so each G ⊗ 1 embedding has trace 2 until it is made traceless
    assert report.raw_generator_traces == pytest.approx([2.0, 2.0])
    assert report.max_trace_residual <= 1e-12


def test_malformed_commutator_table(tmp_path):
    bad = tmp_path / "table.yaml"
    bad.write_text("rows:\n  2: {1: 3}\n  3: {4: 3}\n")
    with pytest.raises(TableFormatError):
        load_commutator_table(bad)
    (tmp_path / "short.yaml").write_text("rows:\n  2: {1: 3}\n")
    with pytest.raises(TableFormatError):
        load_commutator_table(tmp_path / "short.yaml")


def test_parse_gate_word():
    assert parse_gate_word("G, CW,Gd") == ("G", "CW", "Gd")
    with pytest.raises(ValueError):
        parse_gate_word("G,X")


def test_word_unitary():
    assert np.allclose(word_unitary(["CW"] * 3), np.eye(8))
    assert np.allclose(word_unitary(["G", "Gd"]), np.eye(8))
    assert np.allclose(word_unitary(["G"]), embed_two_qubit(gate_G(), 0, 1, 3))


@pytest.mark.parametrize("word", [("G",), ("Gd",), ("G", "G")])
def test_synthesize_recovers_short_words(word):
    result = synthesize(word_unitary(word), 1e-9, 2)
    assert result.word == word
    assert result.distance <= 1e-9


def test_synthesize_accepts_two_qubit_targets():
    assert synthesize(gate_G(), 1e-9, 1).word == ("G",)
    assert synthesize(np.eye(8), 1e-9, 3).word == ()


def test_synthesize_reports_best_distance():
    with pytest.raises(SynthesisError) as info:
        synthesize(gate_G(), 1e-9, 0)
    assert info.value.best_distance > 1e-9


def test_qrm_swap_walks_a_marker_round_the_ring():
    out = simulate_qrm(SWAP, 2, 3, 2, basis_state([1, 0, 0]))
    assert np.allclose(out, basis_state([0, 0, 1]))


def test_qrm_round_matches_step_simulation(rng):
    R = gate_G()
    psi = random_state(4, rng)
    assert np.allclose(simulate_qrm(R, 2, 4, 4, psi), qrm_round_circuit(R, 2, 4) @ psi)


def test_qrm_size_guard():
    with pytest.raises(DimensionOverflowError):
        simulate_qrm(np.eye(256), 16, 6, 1, np.zeros(1))


def test_cube_parameters():
    params = cube_parameters("1", d=4, t=1)
    assert (params.W, params.D, params.H) == (1, 3, 8)
    assert (params.W + params.D) % params.qubit_block == 0
    wide = cube_parameters("01", d=2, t=1)
    assert counter_front_string(LatticeDims(W=wide.W, H=1, D=wide.D)) == "01"
    assert wide.H == 2 * (wide.W + wide.D)


def test_cube_parameters_rejects_unreachable_programs():
    with pytest.raises(UnrealizableProgramError):
        cube_parameters("0", d=4, t=1)
