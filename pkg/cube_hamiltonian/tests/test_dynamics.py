from dataclasses import replace

import networkx as nx
import numpy as np
import pytest

from cube_hamiltonian.dynamics import (
    ARROWS,
    ULG,
    ClockConfig,
    EdgeTape,
    Head,
    TransitionRule,
    ULGEdge,
    apply_rules,
    apply_rules_backward,
    build_transition_rules,
    build_ulg,
    canonical_start,
    check_clock_statics,
    check_simplicity,
    explore_ulg,
    forward_walk,
    frame_unitaries,
    head_count,
    heads_adjacent,
    history_state,
    is_terminal,
    partner_position,
    path_ulg,
    register_ring_order,
    seed_multi_head,
    spin_configuration,
    terminal_ring_state,
    ulg_to_networkx,
    validate_rules,
)
from cube_hamiltonian.lattice import perimeter_vertex
from cube_hamiltonian.program import (
    GateOp,
    apply_circuit,
    circuit_from_program,
    encode_circuit,
    lines_to_ring,
    opposite,
    simulate_ring,
)
from cube_hamiltonian.spectral import check_kernel
from cube_hamiltonian.statics import edge_sequence, static_energy
from cube_hamiltonian.types import (
    Axis,
    GateTag,
    LatticeDims,
    RuleSetError,
    SimplicityError,
    Site,
    SpinSymbol,
    StaticViolationError,
    Sublattice,
)
from tests.helpers import circuit_tape, fidelity, random_state, walk_ring_state

S = SpinSymbol

TOY_CIRCUITS = [
    (1, 1, [(GateTag.G, 1)]),
    (1, 1, [(GateTag.G, 0), (GateTag.GDAG, 2)]),
    (2, 1, [(GateTag.GDAG, 3), (GateTag.G, 1)]),
    (1, 2, [(GateTag.G, 4)]),
]


def test_rule_set_shape():
    rules = build_transition_rules()
    assert len(rules) == 12
    assert {r.arrow for r in rules} == {S.ARROW_R, S.ARROW_L}
    assert all(len(r.roles) <= 4 for r in rules)
    gates = {r.arrow: r.tag for r in rules if r.kind == "gate"}
    assert gates == {S.ARROW_L: GateTag.G, S.ARROW_R: GateTag.GDAG}


def test_validate_rules_rejects_bad_rules():
    rules = list(build_transition_rules())
    with pytest.raises(RuleSetError):
        validate_rules(rules + [rules[0]])
    wide = TransitionRule("wide", "move", S.ARROW_R, ("a", "b", "c", "d", "e"), ("ArrowR", "q", ".", ".", "."),
                          (".", "ArrowR", "q", ".", "."))
    with pytest.raises(RuleSetError):
        validate_rules([wide])
    lossy = TransitionRule("lossy", "move", S.ARROW_R, ("a", "b"), ("ArrowR", "q"), (".", "ArrowR"))
    with pytest.raises(RuleSetError):
        validate_rules([lossy])


def test_canonical_start_places_the_register():
    tape = EdgeTape.from_program(LatticeDims(W=1, H=3, D=1), "0")
    start = canonical_start(tape)
    assert start.slots == ((0, 3), (0, 1), (0, 2))
    assert register_ring_order(start) == [0, 1, 2]
    assert start.heads[0].symbol is S.ARROW_R


def test_tape_from_ground(ground_332):
    tape = EdgeTape.from_ground(ground_332.dims)
    assert len(tape.bits) == ground_332.dims.H
    assert tape.green(0) is S.ZERO and tape.green(ground_332.dims.H) is S.ZERO


@pytest.mark.parametrize(
    "dims,program,expected",
    [
        (LatticeDims(W=1, H=3, D=1), "0", 3 * 4),
        (LatticeDims(W=1, H=3, D=1), "1", 3 * 4 + 2),
        (LatticeDims(W=2, H=3, D=2), "0", 3 * 8 + 3 * 3),
        (LatticeDims(W=2, H=2, D=3), "01", 2 * 10 + 3 * 2),
    ],
)
def test_vertex_count_of_gate_free_sweeps(dims, program, expected):
    tape = EdgeTape.from_program(dims, program)
    ulg = build_ulg(tape)
    assert ulg.vertex_count == expected
    assert len(ulg.terminals) == 1
    assert ulg.input_slot == 0
    bulk = sum(1 for c in ulg.vertices if c.heads[0].bulk)
    assert bulk == (3 * dims.H if dims.W >= 2 and dims.D >= 2 else 0)


def test_branching_stays_within_two():
    tape = EdgeTape.from_program(LatticeDims(W=2, H=3, D=2), "0110")
    ulg = build_ulg(tape)
    assert ulg.vertex_count <= 2 * tape.dims.H * tape.dims.perimeter
    for config in ulg.vertices:
        onward = apply_rules(config)
        assert len(onward) <= 2
        if len(onward) == 2:
            assert {t.rule.split("_")[0] for t in onward} == {"move", "leak"}


@pytest.mark.parametrize("W,D,circuit", TOY_CIRCUITS)
def test_rules_are_reversible_and_conserve_heads(W, D, circuit):
    ulg = build_ulg(circuit_tape(W, D, circuit))
    forward, backward = set(), set()
    for config in ulg.vertices:
        for t in apply_rules(config):
            assert head_count(t.target) == head_count(config)
            assert any(b.source == config and b.rule == t.rule for b in apply_rules_backward(t.target))
            forward.add((t.source, t.target, t.rule))
        for t in apply_rules_backward(config):
            assert head_count(t.source) == head_count(config)
            backward.add((t.source, t.target, t.rule))
    assert forward == backward


def test_two_head_sector_is_closed():
    tape = EdgeTape.from_program(LatticeDims(W=1, H=4, D=1), "0")
    seeded = seed_multi_head(tape, [(S.ARROW_R, 0), (S.ARROW_R, 2)])
    assert not heads_adjacent(seeded)
    ulg = explore_ulg(seeded, movable=(0,))
    assert all(head_count(c) == 2 for c in ulg.vertices)
    assert any(heads_adjacent(c) for c in ulg.vertices)
    assert ulg.terminals == ()


def test_seed_multi_head_rejects_shared_vertices():
    tape = EdgeTape.from_program(LatticeDims(W=1, H=2, D=1), "0")
    with pytest.raises(ValueError):
        seed_multi_head(tape, [(S.ARROW_R, 1), (S.ARROW_L, 1)])


def test_vertex_budget(gate_tape):
    with pytest.raises(RuleSetError):
        build_ulg(gate_tape, budget=5)


@pytest.mark.parametrize("W,D,circuit", TOY_CIRCUITS)
def test_toy_graphs_are_simple_with_history_in_kernel(W, D, circuit, rng):
    tape = circuit_tape(W, D, circuit)
    ulg = build_ulg(tape)
    report = check_simplicity(ulg)
    assert report.simple
    assert report.max_residual <= 1e-10
    psi = random_state(ulg.q, rng)
    assert check_kernel(ulg, psi)
    history = history_state(ulg, psi)
    assert np.isclose(np.linalg.norm(history.vector()), 1.0)


@pytest.mark.parametrize("W,D,circuit", TOY_CIRCUITS)
def test_terminal_register_matches_ring_simulation(W, D, circuit, rng):
    tape = circuit_tape(W, D, circuit)
    ulg = build_ulg(tape)
    n = tape.ring_size
    psi = random_state(n, rng)
    expected = simulate_ring(tape.program, n, psi, levels=tape.dims.H)
    fidelity = abs(np.vdot(expected, terminal_ring_state(ulg, psi))) ** 2
    assert fidelity >= 1 - 1e-10


def test_frames_cover_every_vertex(gate_ulg):
    result = frame_unitaries(gate_ulg)
    assert set(result.frames) == set(range(gate_ulg.vertex_count))
    assert np.allclose(result.frames[gate_ulg.initial], np.eye(2**gate_ulg.q))
    for frame in result.frames.values():
        assert np.allclose(frame.conj().T @ frame, np.eye(2**gate_ulg.q))
    assert result.report.simple


@pytest.mark.slow
def test_random_programs_end_to_end():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        W, D = [(1, 1), (1, 2), (2, 1)][rng.integers(3)]
        n = 2 * (W + D) - 1
        circuit = [(GateTag.G if rng.random() < 0.5 else GateTag.GDAG, int(rng.integers(n))) for _ in range(rng.integers(1, 5))]
        tape = circuit_tape(W, D, circuit)
        ulg = build_ulg(tape)
        assert check_simplicity(ulg).simple
        psi = random_state(n, rng)
        expected = simulate_ring(tape.program, n, psi, levels=tape.dims.H)
        assert abs(np.vdot(expected, terminal_ring_state(ulg, psi))) ** 2 >= 1 - 1e-10


@pytest.mark.slow
def test_larger_ring_with_bulk_branches(rng):
    tape = circuit_tape(2, 2, [(GateTag.G, 2), (GateTag.GDAG, 5)])
    ulg = build_ulg(tape)
    assert check_simplicity(ulg).simple
    psi = random_state(ulg.q, rng)
    assert check_kernel(ulg, psi)
    expected = simulate_ring(tape.program, tape.ring_size, psi, levels=tape.dims.H)
    assert abs(np.vdot(expected, terminal_ring_state(ulg, psi))) ** 2 >= 1 - 1e-10


def test_forward_walk_reaches_the_terminal(gate_tape, gate_ulg):
    walk = forward_walk(gate_tape)
    assert is_terminal(walk[-1].target)
    assert [t.tag for t in walk if t.tag is not GateTag.IDENTITY] == [GateTag.G, GateTag.GDAG]
    # every non-bulk vertex lies on the walk
    assert len(walk) + 1 == gate_ulg.vertex_count


def test_non_simple_loop_is_detected():
    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    ulg = ULG([0, 1, 2], [ULGEdge(0, 1, matrix=flip), ULGEdge(1, 2), ULGEdge(0, 2)], q=1)
    report = check_simplicity(ulg)
    assert not report.simple
    assert report.witness_loop
    with pytest.raises(SimplicityError):
        history_state(ulg, np.array([1, 0], dtype=complex))


def test_path_graph_frames():
    ulg = path_ulg(4)
    assert check_simplicity(ulg).simple
    assert ulg.vertex_count == 4 and len(ulg.edges) == 3


def test_networkx_view(gate_ulg):
    graph = ulg_to_networkx(gate_ulg)
    assert graph.number_of_nodes() == gate_ulg.vertex_count
    assert nx.is_connected(graph)
    tags = {data["tag"] for _, _, data in graph.edges(data=True)}
    assert tags == {"I", "G", "Gd"}
    assert sum(1 for _, data in graph.nodes(data=True) if data["terminal"]) == 1


def test_unknown_pattern_symbols_are_rejected():
    rules = list(build_transition_rules())
    garbled = replace(rules[0], before=("Z", "q", "."), after=(".", "Y", "q"))
    with pytest.raises(RuleSetError):
        validate_rules([garbled])


def test_rules_rewrite_what_their_patterns_say():
    tape = EdgeTape.from_program(LatticeDims(W=1, H=4, D=1), "0001")
    rules = build_transition_rules()
    flipped = [
        replace(r, after=(r.after[0], opposite(r.arrow).value) + r.after[2:]) if r.name.startswith("pass") else r
        for r in rules
    ]
    validate_rules(flipped)
    plain = explore_ulg(canonical_start(tape), rules)
    turned = explore_ulg(canonical_start(tape), flipped)

    def heads_on_last_level(ulg):
        return {c.heads[0].symbol for c in ulg.vertices if c.heads[0].level == 3}

    assert heads_on_last_level(plain) == {S.ARROW_R}
    assert heads_on_last_level(turned) == {S.ARROW_L}
    assert {c.label() for c in plain.vertices} != {c.label() for c in turned.vertices}


def test_gate_pair_follows_the_gate_roles(gate_ulg):
    rules = {r.name: r for r in build_transition_rules()}
    assert rules["gate_ArrowR"].gate_roles == ("partner", "edge_below")
    assert rules["gate_ArrowL"].gate_roles == ("edge_below", "partner")
    for edge in gate_ulg.edges:
        if edge.tag is GateTag.IDENTITY:
            continue
        source = gate_ulg.vertices[edge.source]
        level = source.heads[0].level + 1
        arrow = S.ARROW_R if edge.rule.endswith("ArrowR") else S.ARROW_L
        pair = {
            "edge_below": source.slot_at((level, 0)),
            "partner": source.slot_at((level, partner_position(arrow, source.tape.dims))),
        }
        assert edge.slots == tuple(pair[role] for role in rules[edge.rule].gate_roles)


def test_ground_tape_carries_its_spins(ground_332):
    tape = EdgeTape.from_ground(ground_332.dims)
    assert tape.ground == ground_332
    start = canonical_start(tape)
    spins = spin_configuration(start)
    assert spins[perimeter_vertex(0, 0, tape.dims)] is S.ARROW_R
    assert static_energy(spins) == 0
    with pytest.raises(ValueError):
        spin_configuration(canonical_start(EdgeTape.from_program(tape.dims, "0")))


@pytest.mark.parametrize("dims", [LatticeDims(W=2, H=2, D=2), LatticeDims(W=3, H=3, D=2)], ids=lambda d: d.label())
def test_ground_sweeps_stay_in_the_static_ground(dims):
    ulg = build_ulg(EdgeTape.from_ground(dims))
    assert len(ulg.terminals) == 1
    for config in ulg.vertices:
        check_clock_statics(config)
        if not any(h.symbol is S.BANG for h in config.heads):
            assert static_energy(spin_configuration(config)) == 0


def test_corrupted_ground_stops_the_clock(ground_332):
    bulk = Site(Sublattice.RED, (1, 0, 0), Axis.X)
    corrupted = ground_332.with_symbol(bulk, S.BIT0)
    tape = EdgeTape(ground_332.dims, tuple(edge_sequence(ground_332)), ground=corrupted)
    with pytest.raises(StaticViolationError):
        apply_rules(canonical_start(tape))
    with pytest.raises(StaticViolationError):
        explore_ulg(canonical_start(tape))


def test_ground_must_wind_the_tape_bits(ground_332):
    bits = tuple(1 - b for b in edge_sequence(ground_332))
    with pytest.raises(ValueError):
        EdgeTape(ground_332.dims, bits, ground=ground_332)


@pytest.mark.parametrize("face", [0, -1])
def test_edge_bang_below_the_top_layer_costs_nothing(ground_332, face):
    tape = EdgeTape.from_ground(ground_332.dims)
    r = face % tape.dims.perimeter
    config = ClockConfig(tape, (Head(S.BANG, 1, r),), canonical_start(tape).slots)
    check_clock_statics(config)
    assert static_energy(spin_configuration(config)) == 0


def test_top_layer_bang_is_checked_for_placement_only(ground_332):
    tape = EdgeTape.from_ground(ground_332.dims)
    config = ClockConfig(tape, (Head(S.BANG, 0, 0),), canonical_start(tape).slots)
    check_clock_statics(config)
    assert static_energy(spin_configuration(config)) > 0


def test_bang_off_the_edge_faces_is_a_static_violation(ground_332):
    tape = EdgeTape.from_ground(ground_332.dims)
    config = ClockConfig(tape, (Head(S.BANG, 1, 2),), canonical_start(tape).slots)
    with pytest.raises(StaticViolationError) as info:
        apply_rules(config)
    assert info.value.term == "bang_placement"


SEED_DIMS = [
    LatticeDims(W=1, H=4, D=1),
    LatticeDims(W=2, H=3, D=1),
    LatticeDims(W=2, H=3, D=2),
    LatticeDims(W=1, H=5, D=2),
]


@pytest.mark.slow
def test_seeded_multi_head_configurations_are_reversible():
    rng = np.random.default_rng(31)
    rules = build_transition_rules()
    checked = 0
    while checked < 10_000:
        dims = SEED_DIMS[rng.integers(len(SEED_DIMS))]
        program = "".join(rng.choice(["0", "1"], size=int(rng.integers(1, 5))))
        tape = EdgeTape.from_program(dims, program)
        positions = rng.choice(dims.perimeter, size=int(rng.integers(1, 4)), replace=False)
        config = seed_multi_head(tape, [(ARROWS[rng.integers(2)], int(k)) for k in positions])
        for _ in range(200):
            onward = apply_rules(config, rules)
            back = apply_rules_backward(config, rules)
            for t in onward:
                assert head_count(t.target) == head_count(config)
                assert len(set(t.target.slots)) == len(config.slots)
                assert any(b.source == config and b.rule == t.rule for b in apply_rules_backward(t.target, rules))
            for t in back:
                assert head_count(t.source) == head_count(config)
                assert any(f.target == config and f.rule == t.rule for f in apply_rules(t.source, rules))
            checked += 1
            neighbours = [t.target for t in onward] + [t.source for t in back]
            if not neighbours:
                break
            config = neighbours[rng.integers(len(neighbours))]


@pytest.mark.slow
@pytest.mark.parametrize("W,D", [(1, 3), (2, 2), (3, 3), (2, 4)])
def test_random_circuits_through_the_cube(W, D):
    rng = np.random.default_rng(10 * W + D)
    n = 2 * (W + D) - 1
    for _ in range(3):
        circuit = [
            (GateTag.G if rng.random() < 0.5 else GateTag.GDAG, int(rng.integers(n))) for _ in range(rng.integers(1, 9))
        ]
        program = encode_circuit(circuit, n)
        trace = circuit_from_program(program, n)
        assert trace.ops == tuple(GateOp(g, k) for g, k in circuit)
        psi = random_state(n, rng)

        exact = EdgeTape.from_program(LatticeDims(W=W, H=len(program), D=D), program)
        expected = lines_to_ring(apply_circuit(trace.ops, n, psi), n, trace.final_offset)
        assert fidelity(expected, walk_ring_state(exact, psi)) >= 1 - 1e-9

        t = -(-len(program) // (2 * (W + D)))
        tall = EdgeTape.from_program(LatticeDims(W=W, H=2 * t * (W + D), D=D), program)
        expected = simulate_ring(program, n, psi, levels=tall.dims.H)
        assert fidelity(expected, walk_ring_state(tall, psi)) >= 1 - 1e-9
