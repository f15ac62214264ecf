"""Classical half of the construction: diagonal term catalog, energy and ground solver."""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import z3

from cube_hamiltonian.constants import CATALOG_SCALE
from cube_hamiltonian.lattice import (
    Configuration,
    enumerate_sites,
    get_stencil,
    is_right_face,
    perimeter_face,
    perimeter_face_index,
    site_index,
    stencil_placements,
)
from cube_hamiltonian.types import (
    ALPHABETS,
    BIT_SYMBOLS,
    Axis,
    DegenerateInstanceError,
    LatticeDims,
    Site,
    SpinSymbol,
    StaticViolationError,
    Sublattice,
)

logger = logging.getLogger(__name__)

S = SpinSymbol
Symbols = Tuple[SpinSymbol, ...]


@dataclass(frozen=True)
class WangTile:
    """Counter tile: a = back edge, b = right edge, s = front edge, c = left edge."""

    a: int
    b: int
    s: int
    c: int

    @property
    def label(self) -> str:
        return f"{self.a}{self.b}{self.s}{self.c}"


COUNTER_TILES = frozenset(
    WangTile(int(t[0]), int(t[1]), int(t[2]), int(t[3])) for t in ("0000", "1101", "1010", "0110")
)


def counter_tile(a: int, b: int) -> WangTile:
    return WangTile(a, b, a ^ b, a & b)


def bit_of(symbol: SpinSymbol) -> int:
    return 1 if symbol is S.BIT1 else 0


def bit_symbol(bit: int) -> SpinSymbol:
    return S.BIT1 if bit else S.BIT0


def flip(symbol: SpinSymbol) -> SpinSymbol:
    return S.BIT0 if symbol is S.BIT1 else S.BIT1


def green_constraint(p_i: int, p_next: int) -> SpinSymbol:
    """Green symbol at the computation edge for consecutive program bits."""
    if not p_next:
        return S.B
    return S.A if p_i else S.C


# Catalog


@dataclass(frozen=True)
class LocalTerm:
    name: str
    stencil: str
    table: Mapping[Symbols, Fraction]
    coefficient: Fraction = Fraction(1)
    kind: str = "constraint"

    def value(self, symbols: Symbols) -> Fraction:
        weight = self.table.get(symbols)
        return self.coefficient * weight if weight else Fraction(0)

    @property
    def arity(self) -> int:
        return get_stencil(self.stencil).arity


@dataclass(frozen=True)
class TermCatalog:
    terms: Tuple[LocalTerm, ...]
    scale: Fraction = CATALOG_SCALE
    by_stencil: Dict[str, Tuple[LocalTerm, ...]] = field(default_factory=dict, compare=False)

    def term(self, name: str) -> LocalTerm:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    def shift(self, dims: LatticeDims) -> Fraction:
        """Negated raw energy of the intended ground, so that the ground sits at exactly 0."""
        W, H, D = dims.W, dims.H, dims.D
        column = -Fraction(max(H - 1, 0), 2) - max(H - 2, 0)
        columns = max(W - 1, 0) * D + W * max(D - 1, 0)
        greens = W * (H + 1) * D - max(H - 1, 0)
        raw = column * columns - Fraction(1, 2) * greens
        return -self.scale * raw


def _table(stencil: str, rule: Callable[..., Fraction]) -> Dict[Symbols, Fraction]:
    pattern = get_stencil(stencil)
    alphabets = [ALPHABETS[s.sublattice] for s in pattern.sites]
    table = {}
    for combo in itertools.product(*alphabets):
        weight = Fraction(rule(*combo))
        if weight:
            table[combo] = weight
    return table


def _is_bit(symbol: SpinSymbol) -> bool:
    return symbol in BIT_SYMBOLS


def _copy_cost(source: SpinSymbol, target: SpinSymbol, flipped: bool = False) -> int:
    if not _is_bit(source):
        return 1
    expected = flip(source) if flipped else source
    return 0 if target is expected else 1


def _tile_rule(s, a, b, c):
    edges = (a, b, s, c)
    if S.RX in edges:
        return 0
    if not all(_is_bit(e) for e in edges):
        return 1
    tile = WangTile(bit_of(a), bit_of(b), bit_of(s), bit_of(c))
    return 0 if tile in COUNTER_TILES else 1


def _seed_rule(required: SpinSymbol):
    def rule(site, inner, below):
        if inner is S.RX or below is S.RX:
            return 0
        return 0 if site is required else 1

    return rule


def _face_winding(tolerate_source_bang=False, tolerate_target_bang=False, with_top=False):
    def rule(source, target, inward, extra=None):
        if source is S.RX or target is S.RX or inward is not S.RX:
            return 0
        at_edge = extra is not None and extra is not S.RX
        if tolerate_source_bang and at_edge and source is S.BANG:
            return 0
        if tolerate_target_bang and at_edge and target is S.BANG:
            return 0
        flipped = with_top and extra is not S.RX
        return _copy_cost(source, target, flipped)

    return rule


def _corner_winding(with_top=False, tolerate_bang=False):
    def rule(source, target, below, top=None):
        if source is S.RX or target is S.RX or below is S.RX:
            return 0
        if tolerate_bang and (source is S.BANG or target is S.BANG):
            return 0
        flipped = with_top and top is not S.RX
        return _copy_cost(source, target, flipped)

    return rule


def _green_rule(green, above, below, side):
    if above is S.RX or below is S.RX or side is S.RX:
        return 0
    if above is S.BANG or below is S.BANG:
        return 0
    return 0 if green is green_constraint(bit_of(above), bit_of(below)) else 1


def _term(name, stencil, rule, kind="constraint") -> LocalTerm:
    return LocalTerm(name=name, stencil=stencil, table=_table(stencil, rule), coefficient=CATALOG_SCALE, kind=kind)


@lru_cache(maxsize=1)
def build_static_catalog() -> TermCatalog:
    """Full diagonal catalog; independent of the lattice dimensions."""
    terms = []
    for axis in ("x", "z"):
        terms += [
            _term(f"rx_penalty_{axis}", f"red_{axis}", lambda s: 3 if s is S.RX else 0, kind="penalty"),
            _term(
                f"rx_support_bonus_{axis}",
                f"vertical_pair_{axis}",
                lambda lower, upper: -2 if lower is S.RX else 0,
                kind="bonus",
            ),
            _term(
                f"rx_stack_bonus_{axis}",
                f"vertical_pair_{axis}",
                lambda lower, upper: -1 if lower is S.RX and upper is S.RX else 0,
                kind="bonus",
            ),
            _term(
                f"rx_inplane_bonus_{axis}",
                f"inplane_triple_{axis}",
                lambda center, before, after: Fraction(-3, 2) if center is S.RX else 0,
                kind="bonus",
            ),
        ]
    terms += [
        _term("counter_tile", "b_layer_plaquette", _tile_rule),
        _term("counter_seed_right", "top_right_edge_seed", _seed_rule(S.BIT1)),
        _term("counter_seed_back", "top_back_edge_seed", _seed_rule(S.BIT0)),
        _term("winding_left", "winding_left", _face_winding(tolerate_source_bang=True)),
        _term("winding_back", "winding_back", _face_winding()),
        _term("winding_right", "winding_right", _face_winding(with_top=True)),
        _term("winding_front", "winding_front", _face_winding(tolerate_target_bang=True)),
        _term("corner_winding_left_back", "corner_winding_left_back", _corner_winding()),
        _term("corner_winding_back_right", "corner_winding_back_right", _corner_winding()),
        _term("corner_winding_right_front", "corner_winding_right_front", _corner_winding(with_top=True)),
        _term("corner_winding_front_left", "corner_winding_front_left", _corner_winding(tolerate_bang=True)),
        _term("green_zero_bonus", "green_face", lambda g: Fraction(-1, 2) if g is S.ZERO else 0, kind="bonus"),
        _term("green_program", "green_program", _green_rule),
    ]
    by_stencil: Dict[str, List[LocalTerm]] = {}
    for t in terms:
        by_stencil.setdefault(t.stencil, []).append(t)
    catalog = TermCatalog(
        terms=tuple(terms),
        by_stencil={k: tuple(v) for k, v in by_stencil.items()},
    )
    logger.debug("built static catalog with %d terms", len(terms))
    return catalog


# Energy evaluation


@lru_cache(maxsize=256)
def _placement_indices(stencil: str, dims: LatticeDims) -> Tuple[Tuple[int, ...], ...]:
    index = site_index(dims)
    return tuple(tuple(index[s] for s in placed) for placed in stencil_placements(stencil, dims))


@lru_cache(maxsize=32)
def _incidence(dims: LatticeDims, stencils: Tuple[str, ...]) -> Dict[int, Tuple[Tuple[str, Tuple[int, ...]], ...]]:
    incident: Dict[int, List[Tuple[str, Tuple[int, ...]]]] = {}
    for name in stencils:
        for idx in _placement_indices(name, dims):
            for i in set(idx):
                incident.setdefault(i, []).append((name, idx))
    return {i: tuple(v) for i, v in incident.items()}


def raw_energy(config: Configuration, catalog: TermCatalog) -> Fraction:
    symbols = config.symbols
    total = Fraction(0)
    for stencil, terms in catalog.by_stencil.items():
        for idx in _placement_indices(stencil, config.dims):
            combo = tuple(symbols[i] for i in idx)
            for t in terms:
                total += t.value(combo)
    return total


def static_energy(config: Configuration, catalog: Optional[TermCatalog] = None, dims: Optional[LatticeDims] = None) -> Fraction:
    """Sum over all translates of all terms plus the shift; black placeholders are never read."""
    catalog = catalog or build_static_catalog()
    dims = dims or config.dims
    if dims != config.dims:
        raise ValueError("configuration was built for different dims")
    return raw_energy(config, catalog) + catalog.shift(dims)


def energy_change(
    config: Configuration, site: Site, symbol: SpinSymbol, catalog: Optional[TermCatalog] = None
) -> Fraction:
    """Exact energy difference of replacing one site's symbol."""
    catalog = catalog or build_static_catalog()
    i = site_index(config.dims)[site]
    incident = _incidence(config.dims, tuple(sorted(catalog.by_stencil)))
    before = list(config.symbols)
    after = list(before)
    after[i] = symbol
    delta = Fraction(0)
    for stencil, idx in incident.get(i, ()):
        old = tuple(before[j] for j in idx)
        new = tuple(after[j] for j in idx)
        for t in catalog.by_stencil[stencil]:
            delta += t.value(new) - t.value(old)
    return delta


def first_violation(config: Configuration, catalog: Optional[TermCatalog] = None) -> Optional[Tuple[str, Site]]:
    """First constraint term with positive value, in catalog order then anchor order."""
    catalog = catalog or build_static_catalog()
    sites = enumerate_sites(config.dims)
    symbols = config.symbols
    for t in catalog.terms:
        if t.kind != "constraint":
            continue
        for idx in _placement_indices(t.stencil, config.dims):
            if t.value(tuple(symbols[i] for i in idx)) > 0:
                return t.name, sites[idx[0]]
    return None


def check_static_ground(config: Configuration, catalog: Optional[TermCatalog] = None) -> None:
    catalog = catalog or build_static_catalog()
    energy = static_energy(config.without_black(), catalog)
    if energy == 0:
        return
    violation = first_violation(config, catalog)
    if violation is not None:
        raise StaticViolationError(violation[0], violation[1], f"energy {energy}")
    raise StaticViolationError("bulk_selection", None, f"Rx pattern off its ground, energy {energy}")


# Ground solver


def top_face_tiling(W: int, D: int) -> Dict[Tuple[Axis, int, int], int]:
    """Counter fill of the top face keyed by (axis, x, z); seeds 1 on the right and 0 on the back."""
    bits: Dict[Tuple[Axis, int, int], int] = {}
    for x in range(W):
        bits[(Axis.Z, x, D)] = 0
    for z in range(D - 1, -1, -1):
        carry = 1
        bits[(Axis.X, W, z)] = carry
        for x in range(W - 1, -1, -1):
            tile = counter_tile(bits[(Axis.Z, x, z + 1)], carry)
            bits[(Axis.Z, x, z)] = tile.s
            carry = tile.c
            bits[(Axis.X, x, z)] = carry
    return bits


def counter_front_string(dims: LatticeDims) -> str:
    """Bits on the top front edge, x = 0 first; reads D mod 2^W, most significant bit first."""
    bits = top_face_tiling(dims.W, dims.D)
    return "".join(str(bits[(Axis.Z, x, 0)]) for x in range(dims.W))


def _require_ground_dims(dims: LatticeDims) -> None:
    if dims.W < 2 or dims.H < 2 or dims.D < 2:
        raise DegenerateInstanceError(
            f"dims {dims.label()} cannot host the counter seeds and the winding; need W, H, D >= 2"
        )


def top_perimeter(dims: LatticeDims, flipped: bool = True) -> List[int]:
    """Top-layer perimeter bits by face index r; `flipped` inverts the right face."""
    tiling = top_face_tiling(dims.W, dims.D)
    bits = []
    for r in range(dims.perimeter):
        face = perimeter_face(0, r, dims)
        x, _, z = face.cell
        bit = tiling[(face.axis, x, z)]
        bits.append(bit ^ 1 if flipped and is_right_face(r, dims) else bit)
    return bits


def solve_static_ground(dims: LatticeDims) -> Configuration:
    """Unique classical ground with black spins left unset."""
    _require_ground_dims(dims)
    L = dims.perimeter
    tiling = top_face_tiling(dims.W, dims.D)
    top_flipped = top_perimeter(dims)
    edge = [top_flipped[(L - 1 - layer) % L] for layer in range(dims.H)]

    mapping: Dict[Site, Optional[SpinSymbol]] = {}
    for site in enumerate_sites(dims):
        x, y, z = site.cell
        if site.sublattice is Sublattice.BLACK:
            mapping[site] = None
        elif site.sublattice is Sublattice.RED:
            layer = dims.H - 1 - y
            if layer == 0:
                mapping[site] = bit_symbol(tiling[(site.axis, x, z)])
                continue
            r = perimeter_face_index(site, dims)
            if r is None:
                mapping[site] = S.RX
            else:
                mapping[site] = bit_symbol(top_flipped[(r - layer) % L])
        else:
            level = dims.H - y
            if x == 0 and z == 0 and 1 <= level <= dims.H - 1:
                mapping[site] = green_constraint(edge[level - 1], edge[level])
            else:
                mapping[site] = S.ZERO
    config = Configuration.from_mapping(dims, mapping)
    logger.info("solved static ground for dims %s, edge period %d", dims.label(), L)
    return config


def _perimeter_bits(config: Configuration, layer: int) -> List[SpinSymbol]:
    dims = config.dims
    return [config[perimeter_face(layer, r, dims)] for r in range(dims.perimeter)]


def wound_program_at_edge(config: Configuration, dims: Optional[LatticeDims] = None) -> List[str]:
    """Perimeter string of every B layer read from the computation edge (r = L-1 first).

    The top layer is read with its right face inverted, so each level is the previous
    one shifted by a single winding step.
    """
    dims = dims or config.dims
    check_static_ground(config)
    L = dims.perimeter
    strings = []
    for layer in range(dims.H):
        bits = _perimeter_bits(config, layer)
        values = []
        for j in range(L):
            r = L - 1 - j
            bit = bit_of(bits[r])
            if layer == 0 and is_right_face(r, dims):
                bit ^= 1
            values.append(str(bit))
        strings.append("".join(values))
    return strings


def edge_sequence(config: Configuration) -> List[int]:
    """Program bit exposed on the computation edge of each B layer."""
    return [int(s[0]) for s in wound_program_at_edge(config)]


# Exhaustive checks


def _z3_energy(dims: LatticeDims, catalog: TermCatalog, alphabet: Mapping[Sublattice, Sequence[SpinSymbol]]):
    """Integer z3 expression for the scaled energy over red and green sites."""
    sites = enumerate_sites(dims)
    variables: Dict[int, z3.ArithRef] = {}
    domain = []
    for i, site in enumerate(sites):
        if site.sublattice is Sublattice.BLACK:
            continue
        v = z3.Int(f"s{i}")
        variables[i] = v
        allowed = [ALPHABETS[site.sublattice].index(sym) for sym in alphabet[site.sublattice]]
        domain.append(z3.Or([v == k for k in allowed]))

    def is_symbol(i: int, symbol: SpinSymbol):
        return variables[i] == ALPHABETS[sites[i].sublattice].index(symbol)

    summands = []
    for stencil, terms in catalog.by_stencil.items():
        for idx in _placement_indices(stencil, dims):
            options = [alphabet[sites[i].sublattice] for i in idx]
            for combo in itertools.product(*options):
                weight = sum((t.value(combo) for t in terms), Fraction(0))
                if weight:
                    assert weight.denominator == 1
                    condition = z3.And([is_symbol(i, sym) for i, sym in zip(idx, combo)])
                    summands.append(z3.If(condition, int(weight), 0))
    shift = catalog.shift(dims)
    assert shift.denominator == 1
    energy = z3.Sum(summands) + int(shift) if summands else z3.IntVal(int(shift))
    return variables, domain, energy


HEAD_FREE = {
    Sublattice.RED: (S.RX, S.BIT0, S.BIT1),
    Sublattice.GREEN: ALPHABETS[Sublattice.GREEN],
}


def find_zero_energy_configurations(
    dims: LatticeDims, limit: int = 4, catalog: Optional[TermCatalog] = None
) -> List[Configuration]:
    """All zero-energy red and green assignments over the head-free alphabet, up to `limit`."""
    catalog = catalog or build_static_catalog()
    variables, domain, energy = _z3_energy(dims, catalog, HEAD_FREE)
    solver = z3.Solver()
    solver.add(domain)
    solver.add(energy == 0)
    sites = enumerate_sites(dims)
    found = []
    while len(found) < limit and solver.check() == z3.sat:
        model = solver.model()
        values = {i: model.eval(v, model_completion=True).as_long() for i, v in variables.items()}
        mapping = {sites[i]: ALPHABETS[sites[i].sublattice][k] for i, k in values.items()}
        found.append(Configuration.from_mapping(dims, mapping))
        solver.add(z3.Or([v != values[i] for i, v in variables.items()]))
    logger.info("zero-energy search on %s found %d configuration(s)", dims.label(), len(found))
    return found


def ground_gap_holds(dims: LatticeDims, catalog: Optional[TermCatalog] = None) -> bool:
    """True when every head-free configuration other than the ground has energy at least 1."""
    catalog = catalog or build_static_catalog()
    ground = solve_static_ground(dims)
    variables, domain, energy = _z3_energy(dims, catalog, HEAD_FREE)
    sites = enumerate_sites(dims)
    solver = z3.Solver()
    solver.add(domain)
    solver.add(energy < 1)
    solver.add(
        z3.Or([v != ALPHABETS[sites[i].sublattice].index(ground.symbols[i]) for i, v in variables.items()])
    )
    return solver.check() == z3.unsat


def enumerate_counter_tilings(W: int, D: int, limit: int = 4) -> List[str]:
    """Front strings of every seeded counter tiling of a W x D top face, up to `limit`."""
    x_face = {(x, z): z3.Bool(f"x_{x}_{z}") for x in range(W + 1) for z in range(D)}
    z_face = {(x, z): z3.Bool(f"z_{x}_{z}") for x in range(W) for z in range(D + 1)}
    solver = z3.Solver()
    for z in range(D):
        solver.add(x_face[(W, z)])
    for x in range(W):
        solver.add(z3.Not(z_face[(x, D)]))
    for x in range(W):
        for z in range(D):
            a, b = z_face[(x, z + 1)], x_face[(x + 1, z)]
            solver.add(z_face[(x, z)] == z3.Xor(a, b))
            solver.add(x_face[(x, z)] == z3.And(a, b))
    everything = list(x_face.values()) + list(z_face.values())
    fronts = []
    while len(fronts) < limit and solver.check() == z3.sat:
        model = solver.model()
        values = {v: z3.is_true(model.eval(v, model_completion=True)) for v in everything}
        fronts.append("".join("1" if values[z_face[(x, 0)]] else "0" for x in range(W)))
        solver.add(z3.Or([v != z3.BoolVal(val) for v, val in values.items()]))
    return fronts
