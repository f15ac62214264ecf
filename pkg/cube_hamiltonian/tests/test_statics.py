from fractions import Fraction

import numpy as np
import pytest

from cube_hamiltonian.lattice import enumerate_sites, perimeter_face
from cube_hamiltonian.statics import (
    COUNTER_TILES,
    HEAD_FREE,
    build_static_catalog,
    check_static_ground,
    counter_front_string,
    counter_tile,
    edge_sequence,
    energy_change,
    enumerate_counter_tilings,
    find_zero_energy_configurations,
    flip,
    green_constraint,
    ground_gap_holds,
    solve_static_ground,
    static_energy,
    wound_program_at_edge,
)
from cube_hamiltonian.types import (
    Axis,
    DegenerateInstanceError,
    LatticeDims,
    Site,
    SpinSymbol,
    StaticViolationError,
    Sublattice,
)

S = SpinSymbol


@pytest.mark.parametrize("a", [0, 1])
@pytest.mark.parametrize("b", [0, 1])
def test_counter_tile_is_a_half_adder(a, b):
    tile = counter_tile(a, b)
    assert tile.s == a ^ b
    assert tile.c == a & b
    assert tile in COUNTER_TILES


@pytest.mark.parametrize("D", range(1, 65))
def test_counter_front_reads_depth(D):
    assert counter_front_string(LatticeDims(W=7, H=1, D=D)) == format(D % 2**7, "07b")


def test_counter_wraps_modulo_width():
    assert counter_front_string(LatticeDims(W=2, H=1, D=5)) == "01"
    assert counter_front_string(LatticeDims(W=3, H=1, D=8)) == "000"


@pytest.mark.parametrize("W", [2, 3])
@pytest.mark.parametrize("D", range(1, 9))
def test_counter_tiling_is_unique(W, D):
    assert enumerate_counter_tilings(W, D, limit=2) == [format(D % 2**W, f"0{W}b")]


def test_green_constraint_table():
    assert green_constraint(0, 0) is S.B
    assert green_constraint(1, 0) is S.B
    assert green_constraint(0, 1) is S.C
    assert green_constraint(1, 1) is S.A


def test_catalog_is_scaled_and_integral():
    catalog = build_static_catalog()
    assert catalog.scale == 2
    for term in catalog.terms:
        assert term.arity <= 4
        for weight in term.table.values():
            assert (term.coefficient * weight).denominator == 1


@pytest.mark.parametrize(
    "dims", [LatticeDims(W=2, H=2, D=2), LatticeDims(W=3, H=3, D=2), LatticeDims(W=2, H=4, D=3)], ids=lambda d: d.label()
)
def test_ground_has_zero_energy(dims):
    ground = solve_static_ground(dims)
    assert static_energy(ground) == 0
    check_static_ground(ground)


@pytest.mark.parametrize("dims", [LatticeDims(W=1, H=3, D=3), LatticeDims(W=3, H=1, D=3), LatticeDims(W=3, H=3, D=1)])
def test_small_dims_are_degenerate(dims):
    with pytest.raises(DegenerateInstanceError):
        solve_static_ground(dims)


def test_edge_greens_follow_the_wound_program(ground_332):
    dims = ground_332.dims
    bits = edge_sequence(ground_332)
    assert len(bits) == dims.H
    for level in range(dims.H + 1):
        green = ground_332[Site(Sublattice.GREEN, (0, dims.H - level, 0), Axis.Y)]
        if 1 <= level <= dims.H - 1:
            assert green is green_constraint(bits[level - 1], bits[level])
        else:
            assert green is S.ZERO


def test_each_layer_is_the_previous_one_wound_once(ground_332):
    strings = wound_program_at_edge(ground_332)
    for upper, lower in zip(strings, strings[1:]):
        assert lower == upper[1:] + upper[:1]


def test_bulk_rx_is_selected(ground_332):
    bulk = Site(Sublattice.RED, (1, 0, 0), Axis.X)
    assert ground_332[bulk] is S.RX
    assert energy_change(ground_332, bulk, S.BIT0) > 0


def test_side_flip_violates_winding(ground_332):
    face = perimeter_face(1, 3, ground_332.dims)
    corrupted = ground_332.with_symbol(face, flip(ground_332[face]))
    delta = energy_change(ground_332, face, corrupted[face])
    assert delta >= 2
    assert static_energy(corrupted) == delta
    with pytest.raises(StaticViolationError) as info:
        check_static_ground(corrupted)
    assert info.value.term


@pytest.mark.parametrize("dims", [LatticeDims(W=2, H=2, D=2), LatticeDims(W=2, H=3, D=2)], ids=lambda d: d.label())
def test_single_site_corruption_raises_energy(dims):
    ground = solve_static_ground(dims)
    faces = [s for s in enumerate_sites(dims) if s.sublattice is not Sublattice.BLACK]
    rng = np.random.default_rng(7)
    for _ in range(1000):
        site = faces[rng.integers(len(faces))]
        options = [sym for sym in HEAD_FREE[site.sublattice] if sym is not ground[site]]
        symbol = options[rng.integers(len(options))]
        assert energy_change(ground, site, symbol) >= 1


@pytest.mark.slow
def test_ground_is_the_unique_zero(ground_222):
    assert find_zero_energy_configurations(ground_222.dims, limit=2) == [ground_222]
    assert ground_gap_holds(ground_222.dims)


def test_rx_weights():
    catalog = build_static_catalog()
    rx = (S.RX,)
    assert catalog.term("rx_penalty_x").table[rx] == 3
    assert catalog.term("rx_support_bonus_x").table[(S.RX, S.BIT0)] == -2
    assert catalog.term("rx_stack_bonus_x").table[(S.RX, S.RX)] == -1
    assert catalog.term("rx_inplane_bonus_x").table[(S.RX, S.RX, S.RX)] == Fraction(-3, 2)


def test_top_layer_rx_costs_exactly_one(ground_332):
    top = Site(Sublattice.RED, (1, ground_332.dims.H - 1, 0), Axis.X)
    assert ground_332[top] is not S.RX
    assert energy_change(ground_332, top, S.RX) == 1


def test_side_rx_costs_more_than_a_bit(ground_332):
    side = perimeter_face(1, 0, ground_332.dims)
    assert energy_change(ground_332, side, S.RX) >= 2
