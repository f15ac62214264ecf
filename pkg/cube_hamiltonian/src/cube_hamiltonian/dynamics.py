"""Clock dynamics on the black perimeter: heads sweep each level and push the
register one level down, the computation edge turns, continues or gates.

Perimeter vertex k = 0 is the computation edge. Register slot i starts on level 0
at the position of ring index i; ring index 0 sits at position L-1 and ring index
j >= 1 at position j.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from cube_hamiltonian.constants import DEFAULT_VERTEX_BUDGET, SIMPLICITY_TOL
from cube_hamiltonian.lattice import Configuration, interior_corner_neighbor, perimeter_face, perimeter_vertex
from cube_hamiltonian.program import embed_two_qubit, gate_matrix, opposite, permute_register
from cube_hamiltonian.statics import bit_of, check_static_ground, edge_sequence, green_constraint, solve_static_ground
from cube_hamiltonian.types import (
    GateTag,
    LatticeDims,
    RuleSetError,
    SimplicityError,
    SimplicityReport,
    Site,
    SpinSymbol,
    StaticViolationError,
)

logger = logging.getLogger(__name__)

S = SpinSymbol
Position = Tuple[int, int]
ARROWS = (S.ARROW_R, S.ARROW_L)
HEAD_SYMBOLS = ("ArrowR", "ArrowL", "Bang")


# Program bits on the computation edge


@dataclass(frozen=True)
class EdgeTape:
    """Program bit e_l of every B layer l, and the green controls they imply.

    `ground` is the static spin configuration the bits were read from, when there is
    one; clock configurations over the tape are checked against it.
    """

    dims: LatticeDims
    bits: Tuple[int, ...]
    program: Optional[str] = None
    ground: Optional[Configuration] = field(default=None, compare=False, repr=False)
    checked: Set[FrozenSet[Tuple[int, int]]] = field(default_factory=set, init=False, compare=False, repr=False)

    def __post_init__(self):
        if len(self.bits) != self.dims.H:
            raise ValueError(f"need one edge bit per B layer ({self.dims.H}), got {len(self.bits)}")
        if self.ground is not None and self.edge_bits_of(self.ground) != self.bits:
            raise ValueError("the ground does not wind these edge bits")

    @staticmethod
    def edge_bits_of(spins: Configuration) -> Tuple[int, ...]:
        """Bits on red face r = L-1 of every B layer, read without checking the statics."""
        dims = spins.dims
        return tuple(bit_of(spins[perimeter_face(layer, -1, dims)]) for layer in range(dims.H))

    @classmethod
    def from_ground(cls, dims: LatticeDims) -> "EdgeTape":
        ground = solve_static_ground(dims)
        bits = tuple(edge_sequence(ground))
        return cls(dims, bits, "".join(str(b) for b in bits), ground)

    @classmethod
    def from_program(cls, dims: LatticeDims, program: str) -> "EdgeTape":
        """Synthetic tape with e_l = program[l mod len(program)].

        No counter writes these bits, so the tape has no spin ground and its clock
        configurations skip the static check.
        """
        if not program or set(program) - {"0", "1"}:
            raise ValueError(f"program must be a non-empty bit string, got {program!r}")
        if dims.perimeter - 1 < 3:
            raise ValueError("the ring needs at least three slots")
        bits = tuple(int(program[level % len(program)]) for level in range(dims.H))
        return cls(dims, bits, program)

    def green(self, level: int) -> SpinSymbol:
        if 1 <= level <= self.dims.H - 1:
            return green_constraint(self.bits[level - 1], self.bits[level])
        return S.ZERO

    @property
    def ring_size(self) -> int:
        return self.dims.perimeter - 1


def ring_position(index: int, dims: LatticeDims) -> int:
    return dims.perimeter - 1 if index == 0 else index


def ring_index(position: int, dims: LatticeDims) -> int:
    return 0 if position == dims.perimeter - 1 else position


def arrival_position(arrow: SpinSymbol, dims: LatticeDims) -> int:
    """Last perimeter vertex an arrow visits before reaching the edge."""
    return 1 if arrow is S.ARROW_R else dims.perimeter - 1


def bang_face(arrow: SpinSymbol, dims: LatticeDims) -> int:
    return 0 if arrow is S.ARROW_R else dims.perimeter - 1


def _direction(arrow: SpinSymbol) -> int:
    return -1 if arrow is S.ARROW_R else 1


# Configurations


@dataclass(frozen=True)
class Head:
    """A moving marker. Arrows sit on perimeter vertex `position` of A level `level`;
    a Bang sits on red face `position` of B layer `level`. A bulk arrow has left the
    perimeter from corner `position` into the interior one level down."""

    symbol: SpinSymbol
    level: int
    position: int
    bulk: bool = False

    def __post_init__(self):
        if not self.symbol.is_head:
            raise ValueError(f"{self.symbol.value} is not a head symbol")
        if self.bulk and self.symbol is S.BANG:
            raise ValueError("only arrows can leave the perimeter")


@dataclass(frozen=True)
class ClockConfig:
    tape: EdgeTape
    heads: Tuple[Head, ...]
    slots: Tuple[Position, ...]

    @cached_property
    def occupancy(self) -> Dict[Position, Tuple[str, int]]:
        occupied: Dict[Position, Tuple[str, int]] = {}
        for i, position in enumerate(self.slots):
            occupied[position] = ("slot", i)
        for j, head in enumerate(self.heads):
            if head.symbol is not S.BANG and not head.bulk:
                occupied[(head.level, head.position)] = ("head", j)
        return occupied

    @cached_property
    def bangs(self) -> Dict[Position, int]:
        """(B layer, red face) -> head index of every Bang."""
        return {(h.level, h.position): j for j, h in enumerate(self.heads) if h.symbol is S.BANG}

    @cached_property
    def bulk_corners(self) -> Dict[Position, int]:
        return {(h.level, h.position): j for j, h in enumerate(self.heads) if h.bulk}

    @cached_property
    def bulk_sites(self) -> Set[Site]:
        dims = self.tape.dims
        return {interior_corner_neighbor(level, k, dims) for level, k in self.bulk_corners}

    def slot_at(self, position: Position) -> Optional[int]:
        kind, i = self.occupancy.get(position, ("", -1))
        return i if kind == "slot" else None

    def is_free(self, position: Position) -> bool:
        return position not in self.occupancy

    def with_head(self, j: int, head: Head, moved: Optional[Dict[int, Position]] = None) -> "ClockConfig":
        heads = self.heads[:j] + (head,) + self.heads[j + 1 :]
        slots = list(self.slots)
        for i, position in (moved or {}).items():
            slots[i] = position
        return ClockConfig(self.tape, heads, tuple(slots))

    def label(self) -> str:
        marks = ",".join(
            f"{h.symbol.value}@{h.level}:{h.position}{'*' if h.bulk else ''}" for h in self.heads
        )
        return marks or "no-head"


def head_count(config: ClockConfig) -> int:
    return len(config.heads)


def heads_adjacent(config: ClockConfig) -> bool:
    """Two perimeter arrows on neighbouring vertices of the same level."""
    L = config.tape.dims.perimeter
    arrows = [h for h in config.heads if h.symbol in ARROWS and not h.bulk]
    for a_index, a in enumerate(arrows):
        for b in arrows[a_index + 1 :]:
            if a.level == b.level and (a.position - b.position) % L in (1, L - 1):
                return True
    return False


def canonical_start(tape: EdgeTape) -> ClockConfig:
    """One ArrowR on the edge of level 0, the register on the rest of level 0."""
    dims = tape.dims
    slots = tuple((0, ring_position(i, dims)) for i in range(tape.ring_size))
    return ClockConfig(tape, (Head(S.ARROW_R, 0, 0),), slots)


def seed_multi_head(tape: EdgeTape, heads: Sequence[Tuple[SpinSymbol, int]]) -> ClockConfig:
    """Arrows at the given level-0 positions; slots fill the remaining level-0 vertices
    except the edge vertex, in ring order."""
    dims = tape.dims
    L = dims.perimeter
    taken = [k % L for _, k in heads]
    if len(set(taken)) != len(taken):
        raise ValueError("heads must sit on distinct vertices")
    placed = tuple(Head(symbol, 0, k % L) for symbol, k in heads)
    order = [L - 1] + list(range(1, L - 1))
    slots = tuple((0, k) for k in order if k not in taken)
    return ClockConfig(tape, placed, slots)


def zero_head_config(tape: EdgeTape) -> ClockConfig:
    dims = tape.dims
    return ClockConfig(tape, (), tuple((0, ring_position(i, dims)) for i in range(tape.ring_size)))


def register_ring_order(config: ClockConfig) -> List[int]:
    """Slot index at each ring index, for a level start or a terminal configuration.

    At a terminal the returning slot on vertex 0 counts as the arrival vertex.
    """
    dims = config.tape.dims
    if len(config.heads) != 1:
        raise ValueError("ring order is defined for single-head configurations")
    head = config.heads[0]
    if head.symbol not in ARROWS or head.bulk:
        raise ValueError("ring order needs a perimeter arrow")
    if head.position == 0:
        level = head.level
        rename = {}
    elif head.position == arrival_position(head.symbol, dims) and head.level == dims.H - 1:
        level = dims.H
        rename = {0: head.position}
    else:
        raise ValueError(f"configuration {config.label()} is neither a level start nor a terminal")

    order = [-1] * len(config.slots)
    for i, (slot_level, k) in enumerate(config.slots):
        if slot_level != level:
            raise ValueError(f"slot {i} is not on level {level}")
        order[ring_index(rename.get(k, k), dims)] = i
    return order


def is_terminal(config: ClockConfig) -> bool:
    if len(config.heads) != 1:
        return False
    head = config.heads[0]
    dims = config.tape.dims
    return (
        head.symbol in ARROWS
        and not head.bulk
        and head.level == dims.H - 1
        and head.position == arrival_position(head.symbol, dims)
    )


# Rules


@dataclass(frozen=True)
class TransitionRule:
    """Local rewrite: `before` becomes `after` on the listed roles.

    Pattern symbols: a head symbol, "q" for a register slot, "." for an empty vertex,
    "bit" for a program bit, or a green control. Register slots move from the "q"
    roles of one side to the "q" roles of the other in role order. `gate_roles` names
    the two roles whose slots the gate acts on, ring 0 first.
    """

    name: str
    kind: str
    arrow: SpinSymbol
    roles: Tuple[str, ...]
    before: Tuple[str, ...]
    after: Tuple[str, ...]
    tag: GateTag = GateTag.IDENTITY
    green: Optional[SpinSymbol] = None
    gate_roles: Optional[Tuple[str, str]] = None


def _rules_for(arrow: SpinSymbol) -> List[TransitionRule]:
    X = arrow.value
    Y = opposite(arrow).value
    edge_roles = ("head", "edge_below", "hole", "green")
    gate = GateTag.G if arrow is S.ARROW_L else GateTag.GDAG
    pair = ("partner", "edge_below") if arrow is S.ARROW_R else ("edge_below", "partner")
    return [
        TransitionRule(f"move_{X}", "move", arrow, ("head", "ahead", "below"), (X, "q", "."), (".", X, "q")),
        TransitionRule(f"turn_{X}", "edge", arrow, edge_roles, (X, "q", ".", "B"), (".", Y, "q", "B"), green=S.B),
        TransitionRule(f"pass_{X}", "edge", arrow, edge_roles, (X, "q", ".", "C"), (".", X, "q", "C"), green=S.C),
        TransitionRule(
            f"bang_{X}", "bang", arrow, ("head", "face", "hole", "green"), (X, "bit", ".", "A"), (".", "Bang", ".", "A"),
            green=S.A,
        ),
        TransitionRule(
            f"gate_{X}", "gate", arrow, ("face", "edge_below", "hole", "partner"),
            ("Bang", "q", ".", "q"), ("bit", X, "q", "q"), tag=gate, green=S.A, gate_roles=pair,
        ),
        TransitionRule(f"leak_{X}", "leak", arrow, ("head", "interior"), (X, "."), (".", X)),
    ]


PATTERN_TOKENS = frozenset(HEAD_SYMBOLS) | {"q", ".", "bit"} | {g.value for g in (S.A, S.B, S.C, S.ZERO)}


def validate_rules(rules: Sequence[TransitionRule]) -> None:
    seen: Set[Tuple] = set()
    for rule in rules:
        if len(rule.roles) > 4 or len(rule.before) != len(rule.roles) or len(rule.after) != len(rule.roles):
            raise RuleSetError(f"rule {rule.name} must rewrite at most four sites")
        unknown = set(rule.before + rule.after) - PATTERN_TOKENS
        if unknown:
            raise RuleSetError(f"rule {rule.name} uses unknown pattern symbols {sorted(unknown)}")
        if rule.before == rule.after:
            raise RuleSetError(f"rule {rule.name} does not change anything")
        heads_before = sum(s in HEAD_SYMBOLS for s in rule.before)
        heads_after = sum(s in HEAD_SYMBOLS for s in rule.after)
        if heads_before != 1 or heads_after != 1:
            raise RuleSetError(f"rule {rule.name} must move exactly one head")
        if rule.before.count("q") != rule.after.count("q"):
            raise RuleSetError(f"rule {rule.name} creates or destroys a register slot")
        if rule.gate_roles is not None and not set(rule.gate_roles) <= set(rule.roles):
            raise RuleSetError(f"rule {rule.name} gates on roles it does not read")
        key = (rule.kind, rule.arrow, rule.green, rule.before)
        if key in seen:
            raise RuleSetError(f"rule {rule.name} duplicates another rule")
        seen.add(key)


def build_transition_rules() -> Tuple[TransitionRule, ...]:
    rules = tuple(r for arrow in ARROWS for r in _rules_for(arrow))
    validate_rules(rules)
    return rules


@dataclass(frozen=True)
class Transition:
    """Edge source -> target; `slots` are the (ring 0, ring 1) slots a gate acts on."""

    source: ClockConfig
    target: ClockConfig
    rule: str
    tag: GateTag = GateTag.IDENTITY
    slots: Optional[Tuple[int, int]] = None


# Role sites: ("v", level, k) is a perimeter vertex, ("f", layer, r) a red perimeter
# face, ("g", level) the green control on the edge and ("i", level, k) the bulk
# vertex behind corner k.
RoleSite = Tuple[int, ...]
BLOCKED = "#"


def partner_position(arrow: SpinSymbol, dims: LatticeDims) -> int:
    return dims.perimeter - 1 if arrow is S.ARROW_R else 1


def role_sites(rule: TransitionRule, anchor: Position, dims: LatticeDims) -> Optional[Dict[str, RoleSite]]:
    """Where each role of `rule` sits when anchored at (level, k); None off the lattice."""
    level, k = anchor
    L, H = dims.perimeter, dims.H
    arrow = rule.arrow
    if not 0 <= level < H:
        return None
    if rule.kind == "move":
        ahead = (k + _direction(arrow)) % L
        if ahead == 0:
            return None
        return {"head": ("v", level, k), "ahead": ("v", level, ahead), "below": ("v", level + 1, k)}
    if rule.kind == "leak":
        if interior_corner_neighbor(level, k, dims) is None:
            return None
        return {"head": ("v", level, k), "interior": ("i", level, k)}
    k_a = arrival_position(arrow, dims)
    if k != k_a:
        return None
    sites = {
        "head": ("v", level, k_a),
        "edge_below": ("v", level + 1, 0),
        "hole": ("v", level + 1, k_a),
        "face": ("f", level, bang_face(arrow, dims)),
        "green": ("g", level + 1),
        "partner": ("v", level + 1, partner_position(arrow, dims)),
    }
    return {role: sites[role] for role in rule.roles}


def _occupant(config: ClockConfig, site: RoleSite) -> Optional[Tuple[str, int]]:
    kind, level, k = site[0], site[1], site[-1]
    if kind == "v":
        return config.occupancy.get((level, k))
    if kind == "f" and (level, k) in config.bangs:
        return ("head", config.bangs[(level, k)])
    if kind == "i" and (level, k) in config.bulk_corners:
        return ("head", config.bulk_corners[(level, k)])
    return None


def read_token(config: ClockConfig, site: RoleSite) -> str:
    if site[0] == "g":
        return config.tape.green(site[1]).value
    occupant = _occupant(config, site)
    if occupant is not None:
        kind, i = occupant
        return "q" if kind == "slot" else config.heads[i].symbol.value
    if site[0] == "f":
        return "bit"
    if site[0] == "i" and interior_corner_neighbor(site[1], site[2], config.tape.dims) in config.bulk_sites:
        return BLOCKED
    return "."


def _matches(config: ClockConfig, rule: TransitionRule, sites: Dict[str, RoleSite], pattern: Tuple[str, ...]) -> bool:
    return all(read_token(config, sites[role]) == token for role, token in zip(rule.roles, pattern))


def _head_role(rule: TransitionRule, pattern: Tuple[str, ...]) -> str:
    return next(role for role, token in zip(rule.roles, pattern) if token in HEAD_SYMBOLS)


def _place_head(token: str, site: RoleSite) -> Head:
    symbol = S(token)
    if site[0] == "f":
        return Head(symbol, site[1], site[2])
    return Head(symbol, site[1], site[2], bulk=site[0] == "i")


def _rewrite(
    config: ClockConfig, rule: TransitionRule, sites: Dict[str, RoleSite], old: Tuple[str, ...], new: Tuple[str, ...]
) -> ClockConfig:
    """Write `new` over the roles that currently read `old`."""
    carried = [config.slot_at(sites[role][1:]) for role, token in zip(rule.roles, old) if token == "q"]
    landing = [sites[role][1:] for role, token in zip(rule.roles, new) if token == "q"]
    _, j = _occupant(config, sites[_head_role(rule, old)])
    new_role = _head_role(rule, new)
    head = _place_head(new[rule.roles.index(new_role)], sites[new_role])
    return config.with_head(j, head, dict(zip(carried, landing)))


def _gate_pair(config: ClockConfig, rule: TransitionRule, sites: Dict[str, RoleSite]) -> Optional[Tuple[int, int]]:
    if rule.gate_roles is None:
        return None
    first, second = (config.slot_at(sites[role][1:]) for role in rule.gate_roles)
    return first, second


def _candidate_anchors(config: ClockConfig, j: int) -> List[Position]:
    """Anchors whose roles can reach head j: its own vertex, the vertex behind it, and
    the arrival vertices of its level and of the level above."""
    head = config.heads[j]
    L = config.tape.dims.perimeter
    level, k = head.level, head.position
    if head.symbol is S.BANG or head.bulk:
        near = {(level, k)}
    else:
        near = {(level, k), (level, (k + 1) % L), (level, (k - 1) % L)}
    near |= {(level, 1), (level, L - 1), (level - 1, 1), (level - 1, L - 1)}
    return sorted(near)


def _transitions(
    config: ClockConfig, rules: Sequence[TransitionRule], movable: Optional[Iterable[int]], forward: bool
) -> List[Transition]:
    dims = config.tape.dims
    allowed = set(range(len(config.heads))) if movable is None else set(movable)
    anchors = sorted({a for j in allowed if j < len(config.heads) for a in _candidate_anchors(config, j)})
    found: List[Transition] = []
    for rule in rules:
        old, new = (rule.before, rule.after) if forward else (rule.after, rule.before)
        for anchor in anchors:
            sites = role_sites(rule, anchor, dims)
            if sites is None:
                continue
            if rule.green is not None and config.tape.green(anchor[0] + 1) is not rule.green:
                continue
            if not _matches(config, rule, sites, old):
                continue
            occupant = _occupant(config, sites[_head_role(rule, old)])
            if occupant is None or occupant[1] not in allowed:
                continue
            other = _rewrite(config, rule, sites, old, new)
            source, target = (config, other) if forward else (other, config)
            found.append(Transition(source, target, rule.name, rule.tag, _gate_pair(source, rule, sites)))
    return found


def spin_configuration(config: ClockConfig) -> Configuration:
    """The tape's static ground with register carriers and heads written in."""
    tape = config.tape
    if tape.ground is None:
        raise ValueError("tape was built from a program string and carries no spin ground")
    dims = tape.dims
    changes = {perimeter_vertex(level, k, dims): S.Q0 for level, k in config.slots}
    for head in config.heads:
        if head.symbol is S.BANG:
            changes[perimeter_face(head.level, head.position, dims)] = S.BANG
        elif head.bulk:
            changes[interior_corner_neighbor(head.level, head.position, dims)] = head.symbol
        else:
            changes[perimeter_vertex(head.level, head.position, dims)] = head.symbol
    return tape.ground.with_symbols(changes)


def check_clock_statics(config: ClockConfig) -> None:
    """Raise StaticViolationError unless the spins under `config` keep the static ground.

    A Bang may only cover one of the two red faces next to the computation edge.
    Below the top B layer the catalog prices such a Bang at exactly 0. On the top
    layer it covers the counter's edge tile and only its placement is checked.
    Tapes built from a program string carry no ground and are not checked.
    """
    tape = config.tape
    if tape.ground is None:
        return
    dims = tape.dims
    L = dims.perimeter
    priced = []
    for head in config.heads:
        if head.symbol is not S.BANG:
            continue
        if head.position % L not in (0, L - 1):
            raise StaticViolationError(
                "bang_placement",
                perimeter_face(head.level, head.position, dims),
                f"Bang on red face {head.position} of B layer {head.level}",
            )
        if head.level >= 1:
            priced.append((head.level, head.position % L))
    key = frozenset(priced)
    if key in tape.checked:
        return
    spins = tape.ground.with_symbols({perimeter_face(level, r, dims): S.BANG for level, r in key})
    check_static_ground(spins)
    tape.checked.add(key)


def apply_rules(
    config: ClockConfig,
    rules: Optional[Sequence[TransitionRule]] = None,
    movable: Optional[Iterable[int]] = None,
) -> List[Transition]:
    """Every forward transition out of `config`."""
    check_clock_statics(config)
    rules = rules if rules is not None else build_transition_rules()
    return _transitions(config, rules, movable, forward=True)


def apply_rules_backward(
    config: ClockConfig,
    rules: Optional[Sequence[TransitionRule]] = None,
    movable: Optional[Iterable[int]] = None,
) -> List[Transition]:
    """Every forward transition that ends in `config`."""
    check_clock_statics(config)
    rules = rules if rules is not None else build_transition_rules()
    return _transitions(config, rules, movable, forward=False)


# Unitary labeled graphs


@dataclass
class ULGEdge:
    source: int
    target: int
    tag: GateTag = GateTag.IDENTITY
    slots: Optional[Tuple[int, int]] = None
    rule: str = ""
    matrix: Optional[np.ndarray] = None

    def operator(self, q: int) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix, dtype=complex)
        if self.tag is GateTag.IDENTITY or self.slots is None:
            return np.eye(2**q, dtype=complex)
        return embed_two_qubit(gate_matrix(self.tag), self.slots[0], self.slots[1], q)


@dataclass
class ULG:
    """Connected component of the configuration graph with its edge unitaries."""

    vertices: List[object]
    edges: List[ULGEdge]
    q: int
    initial: int = 0
    terminals: Tuple[int, ...] = ()
    input_slot: Optional[int] = None
    output_slots: Dict[int, int] = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    def adjacency(self) -> Dict[int, List[Tuple[int, int]]]:
        """vertex -> [(edge index, neighbour)]"""
        adjacent: Dict[int, List[Tuple[int, int]]] = {v: [] for v in range(self.vertex_count)}
        for e, edge in enumerate(self.edges):
            adjacent[edge.source].append((e, edge.target))
            adjacent[edge.target].append((e, edge.source))
        return adjacent


def path_ulg(length: int, q: int = 1, matrices: Optional[Sequence[np.ndarray]] = None) -> ULG:
    """Path graph 0 - 1 - ... - length-1 with optional edge unitaries."""
    edges = []
    for v in range(length - 1):
        matrix = None if matrices is None else matrices[v]
        edges.append(ULGEdge(v, v + 1, matrix=matrix))
    return ULG(list(range(length)), edges, q)


def explore_ulg(
    initial: ClockConfig,
    rules: Optional[Sequence[TransitionRule]] = None,
    movable: Optional[Iterable[int]] = None,
    budget: int = DEFAULT_VERTEX_BUDGET,
) -> ULG:
    """Closure of `initial` under forward and backward rules, breadth first.

    Vertices are numbered in discovery order, which is deterministic.
    """
    rules = rules if rules is not None else build_transition_rules()
    movable = None if movable is None else tuple(movable)
    index: Dict[ClockConfig, int] = {initial: 0}
    vertices: List[ClockConfig] = [initial]
    edges: Dict[Tuple[int, int, str], ULGEdge] = {}
    queue = deque([initial])

    while queue:
        config = queue.popleft()
        transitions = apply_rules(config, rules, movable) + apply_rules_backward(config, rules, movable)
        for transition in transitions:
            for node in (transition.source, transition.target):
                if node not in index:
                    if len(vertices) >= budget:
                        raise RuleSetError(f"configuration graph exceeds the {budget} vertex budget")
                    index[node] = len(vertices)
                    vertices.append(node)
                    queue.append(node)
            key = (index[transition.source], index[transition.target], transition.rule)
            if key not in edges:
                edges[key] = ULGEdge(key[0], key[1], transition.tag, transition.slots, transition.rule)

    ulg = ULG(vertices, list(edges.values()), len(initial.slots))
    if len(initial.heads) == 1 and initial == canonical_start(initial.tape):
        ulg.input_slot = 0
        ulg.terminals = tuple(v for v, c in enumerate(vertices) if is_terminal(c))
        ulg.output_slots = {v: register_ring_order(vertices[v])[0] for v in ulg.terminals}
    logger.info(
        "explored %d configuration(s), %d edge(s) from %s", len(vertices), len(ulg.edges), initial.label()
    )
    return ulg


def build_ulg(tape: EdgeTape, budget: int = DEFAULT_VERTEX_BUDGET) -> ULG:
    return explore_ulg(canonical_start(tape), budget=budget)


def forward_walk(tape: EdgeTape, budget: int = DEFAULT_VERTEX_BUDGET) -> List[Transition]:
    """Forward transitions from the canonical start to the terminal, skipping bulk dead ends."""
    rules = build_transition_rules()
    config = canonical_start(tape)
    walk: List[Transition] = []
    while len(walk) < budget:
        onward = [t for t in apply_rules(config, rules) if not t.target.heads[0].bulk]
        if not onward:
            return walk
        if len(onward) > 1:
            raise RuleSetError(f"walk branches at {config.label()} into {[t.rule for t in onward]}")
        walk.append(onward[0])
        config = onward[0].target
    raise RuleSetError(f"walk exceeds the {budget} step budget")


# Frames and simplicity


@dataclass
class FrameResult:
    frames: Dict[int, np.ndarray]
    report: SimplicityReport


def _tree_path(parent: Dict[int, Optional[int]], v: int) -> List[int]:
    path = [v]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path


def frame_unitaries(ulg: ULG, tol: float = SIMPLICITY_TOL) -> FrameResult:
    """Path unitary from the initial vertex to every vertex along a BFS tree, and the
    largest mismatch on any edge outside the tree."""
    q = ulg.q
    frames: Dict[int, np.ndarray] = {ulg.initial: np.eye(2**q, dtype=complex)}
    parent: Dict[int, Optional[int]] = {ulg.initial: None}
    adjacency = ulg.adjacency()
    tree_edges: Set[int] = set()
    queue = deque([ulg.initial])
    while queue:
        u = queue.popleft()
        for e, w in adjacency[u]:
            if w in frames:
                continue
            edge = ulg.edges[e]
            operator = edge.operator(q)
            frames[w] = operator @ frames[u] if edge.source == u else operator.conj().T @ frames[u]
            parent[w] = u
            tree_edges.add(e)
            queue.append(w)

    worst, witness = 0.0, []
    for e, edge in enumerate(ulg.edges):
        if e in tree_edges:
            continue
        residual = float(np.linalg.norm(frames[edge.target] - edge.operator(q) @ frames[edge.source], 2))
        if residual > worst:
            worst = residual
            if residual > tol:
                up = _tree_path(parent, edge.source)
                down = _tree_path(parent, edge.target)
                witness = up[::-1] + down
    report = SimplicityReport(simple=worst <= tol, max_residual=worst, witness_loop=witness)
    return FrameResult(frames, report)


def check_simplicity(ulg: ULG, tol: float = SIMPLICITY_TOL) -> SimplicityReport:
    report = frame_unitaries(ulg, tol).report
    if not report.simple:
        logger.warning("graph is not simple: loop mismatch %.3e", report.max_residual)
    return report


@dataclass
class HistoryState:
    amplitudes: np.ndarray  # (vertex, register)

    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


def history_state(ulg: ULG, input_state: np.ndarray, tol: float = SIMPLICITY_TOL) -> HistoryState:
    """Uniform superposition of F_v |input> over every vertex of a simple graph."""
    result = frame_unitaries(ulg, tol)
    if not result.report.simple:
        raise SimplicityError(f"graph is not simple (loop mismatch {result.report.max_residual:.3e})")
    psi = np.asarray(input_state, dtype=complex)
    rows = np.array([result.frames[v] @ psi for v in range(ulg.vertex_count)])
    return HistoryState(rows / np.sqrt(ulg.vertex_count))


# Export


def ulg_to_networkx(ulg: ULG) -> nx.Graph:
    graph = nx.Graph()
    for v, vertex in enumerate(ulg.vertices):
        label = vertex.label() if isinstance(vertex, ClockConfig) else str(vertex)
        heads = head_count(vertex) if isinstance(vertex, ClockConfig) else 0
        graph.add_node(
            v,
            label=label,
            heads=heads,
            initial=v == ulg.initial,
            terminal=v in ulg.terminals,
        )
    for edge in ulg.edges:
        graph.add_edge(edge.source, edge.target, tag=edge.tag.value, rule=edge.rule)
    return graph


def terminal_ring_state(ulg: ULG, input_state: np.ndarray) -> np.ndarray:
    """Register at the first terminal, reordered so that tensor factor j is ring index j."""
    if not ulg.terminals:
        raise ValueError("graph has no terminal configuration")
    frames = frame_unitaries(ulg).frames
    t = ulg.terminals[0]
    order = register_ring_order(ulg.vertices[t])
    destination = [0] * ulg.q
    for j, slot in enumerate(order):
        destination[slot] = j
    return permute_register(frames[t] @ np.asarray(input_state, dtype=complex), ulg.q, destination)
