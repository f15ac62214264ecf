"""Geometry and state model of the face-centered-cubic spin lattice.

Coordinates: x runs along the width W, y along the height H (the stacking axis,
top is y = H) and z along the depth D. Black vertices sit at integer points.
Y-normal faces lie in integer-y planes (layer A) and are green; X- and Z-normal
faces lie in half-integer-y planes (layer B) and are red. The computation edge is
the vertical edge x = 0, z = 0.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from cube_hamiltonian.types import (
    ALPHABETS,
    Axis,
    LatticeDims,
    Region,
    Site,
    SpinSymbol,
    Sublattice,
    UnknownStencilError,
)

logger = logging.getLogger(__name__)

Offset = Tuple[int, int, int]


def cell_ranges(sublattice: Sublattice, axis: Optional[Axis], dims: LatticeDims):
    """Inclusive coordinate ranges of the cells of one site family."""
    W, H, D = dims.W, dims.H, dims.D
    if sublattice is Sublattice.BLACK:
        return (0, W), (0, H), (0, D)
    if axis is Axis.X:
        return (0, W), (0, H - 1), (0, D - 1)
    if axis is Axis.Y:
        return (0, W - 1), (0, H), (0, D - 1)
    return (0, W - 1), (0, H - 1), (0, D)


def in_bounds(site: Site, dims: LatticeDims) -> bool:
    ranges = cell_ranges(site.sublattice, site.axis, dims)
    return all(lo <= c <= hi for c, (lo, hi) in zip(site.cell, ranges))


def half_layer(site: Site) -> int:
    """Index along the stacking axis in half units: 2y for layer A, 2y+1 for layer B."""
    y = site.cell[1]
    return 2 * y + 1 if site.sublattice is Sublattice.RED else 2 * y


_SUBLATTICE_ORDER = {Sublattice.BLACK: 0, Sublattice.RED: 1, Sublattice.GREEN: 2}
_AXIS_ORDER = {None: 0, Axis.X: 1, Axis.Y: 2, Axis.Z: 3}


def _sort_key(site: Site):
    x, _, z = site.cell
    return (half_layer(site), _SUBLATTICE_ORDER[site.sublattice], _AXIS_ORDER[site.axis], x, z)


def _family(sublattice: Sublattice, axis: Optional[Axis], dims: LatticeDims) -> List[Site]:
    (x0, x1), (y0, y1), (z0, z1) = cell_ranges(sublattice, axis, dims)
    return [
        Site(sublattice, (x, y, z), axis)
        for x in range(x0, x1 + 1)
        for y in range(y0, y1 + 1)
        for z in range(z0, z1 + 1)
    ]


@lru_cache(maxsize=64)
def enumerate_sites(dims: LatticeDims) -> Tuple[Site, ...]:
    """All sites of the cuboid in a stable order: layer, sublattice, axis, then x and z."""
    sites = (
        _family(Sublattice.BLACK, None, dims)
        + _family(Sublattice.RED, Axis.X, dims)
        + _family(Sublattice.RED, Axis.Z, dims)
        + _family(Sublattice.GREEN, Axis.Y, dims)
    )
    sites.sort(key=_sort_key)
    logger.debug("enumerated %d sites for dims %s", len(sites), dims.label())
    return tuple(sites)


@lru_cache(maxsize=64)
def site_index(dims: LatticeDims) -> Dict[Site, int]:
    return {site: i for i, site in enumerate(enumerate_sites(dims))}


def sites_of(dims: LatticeDims, sublattice: Sublattice) -> List[Site]:
    return [s for s in enumerate_sites(dims) if s.sublattice is sublattice]


# Stencils


@dataclass(frozen=True)
class StencilSite:
    sublattice: Sublattice
    axis: Optional[Axis]
    offset: Offset


@dataclass(frozen=True)
class Stencil:
    """A named offset pattern. The first entry is the anchor and has offset (0, 0, 0)."""

    name: str
    sites: Tuple[StencilSite, ...]
    roles: Tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.sites)

    @property
    def anchor(self) -> StencilSite:
        return self.sites[0]


def _stencil(name: str, *entries) -> Stencil:
    sites, roles = [], []
    for role, sub, axis, offset in entries:
        sites.append(StencilSite(sub, axis, offset))
        roles.append(role)
    assert sites[0].offset == (0, 0, 0), name
    return Stencil(name, tuple(sites), tuple(roles))


_R, _G = Sublattice.RED, Sublattice.GREEN
_X, _Y, _Z = Axis.X, Axis.Y, Axis.Z

STENCILS: Dict[str, Stencil] = {
    s.name: s
    for s in (
        _stencil("red_x", ("site", _R, _X, (0, 0, 0))),
        _stencil("red_z", ("site", _R, _Z, (0, 0, 0))),
        _stencil("green_face", ("site", _G, _Y, (0, 0, 0))),
        _stencil("vertical_pair_x", ("lower", _R, _X, (0, 0, 0)), ("upper", _R, _X, (0, 1, 0))),
        _stencil("vertical_pair_z", ("lower", _R, _Z, (0, 0, 0)), ("upper", _R, _Z, (0, 1, 0))),
        _stencil(
            "inplane_triple_x",
            ("center", _R, _X, (0, 0, 0)),
            ("before", _R, _X, (-1, 0, 0)),
            ("after", _R, _X, (1, 0, 0)),
        ),
        _stencil(
            "inplane_triple_z",
            ("center", _R, _Z, (0, 0, 0)),
            ("before", _R, _Z, (0, 0, -1)),
            ("after", _R, _Z, (0, 0, 1)),
        ),
        # counter tile edges: a = back, b = right, s = front, c = left
        _stencil(
            "b_layer_plaquette",
            ("s", _R, _Z, (0, 0, 0)),
            ("a", _R, _Z, (0, 0, 1)),
            ("b", _R, _X, (1, 0, 0)),
            ("c", _R, _X, (0, 0, 0)),
        ),
        _stencil(
            "top_right_edge_seed",
            ("site", _R, _X, (0, 0, 0)),
            ("inner", _R, _X, (-1, 0, 0)),
            ("below", _R, _X, (0, -1, 0)),
        ),
        _stencil(
            "top_back_edge_seed",
            ("site", _R, _Z, (0, 0, 0)),
            ("inner", _R, _Z, (0, 0, -1)),
            ("below", _R, _Z, (0, -1, 0)),
        ),
        _stencil(
            "winding_left",
            ("source", _R, _X, (0, 0, 0)),
            ("target", _R, _X, (0, -1, 1)),
            ("inward", _R, _X, (1, -1, 1)),
            ("edge", _R, _Z, (0, 0, 0)),
        ),
        _stencil(
            "winding_back",
            ("source", _R, _Z, (0, 0, 0)),
            ("target", _R, _Z, (1, -1, 0)),
            ("inward", _R, _Z, (1, -1, -1)),
        ),
        _stencil(
            "winding_right",
            ("source", _R, _X, (0, 0, 0)),
            ("target", _R, _X, (0, -1, -1)),
            ("inward", _R, _X, (-1, -1, -1)),
            ("top", _R, _X, (-1, 0, 0)),
        ),
        _stencil(
            "winding_front",
            ("source", _R, _Z, (0, 0, 0)),
            ("target", _R, _Z, (-1, -1, 0)),
            ("inward", _R, _Z, (-1, -1, 1)),
            ("edge", _R, _X, (-1, -1, 0)),
        ),
        _stencil(
            "corner_winding_left_back",
            ("source", _R, _X, (0, 0, 0)),
            ("target", _R, _Z, (0, -1, 1)),
            ("below", _R, _X, (0, -1, 0)),
        ),
        _stencil(
            "corner_winding_back_right",
            ("source", _R, _Z, (0, 0, 0)),
            ("target", _R, _X, (1, -1, -1)),
            ("below", _R, _Z, (0, -1, 0)),
        ),
        _stencil(
            "corner_winding_right_front",
            ("source", _R, _X, (0, 0, 0)),
            ("target", _R, _Z, (-1, -1, 0)),
            ("below", _R, _X, (0, -1, 0)),
            ("top", _R, _X, (-1, 0, 0)),
        ),
        _stencil(
            "corner_winding_front_left",
            ("source", _R, _Z, (0, 0, 0)),
            ("target", _R, _X, (0, -1, 0)),
            ("below", _R, _Z, (0, -1, 0)),
        ),
        _stencil(
            "green_program",
            ("green", _G, _Y, (0, 0, 0)),
            ("above", _R, _Z, (0, 0, 0)),
            ("below", _R, _Z, (0, -1, 0)),
            ("side", _R, _X, (0, -1, 0)),
        ),
    )
}


def get_stencil(name: str) -> Stencil:
    try:
        return STENCILS[name]
    except KeyError:
        raise UnknownStencilError(f"unknown stencil {name!r}") from None


def place(stencil: Stencil, cell: Offset, dims: LatticeDims) -> Optional[Tuple[Site, ...]]:
    """Sites hit by the stencil anchored at `cell`, or None if any falls outside the cuboid."""
    x, y, z = cell
    placed = []
    for entry in stencil.sites:
        dx, dy, dz = entry.offset
        site = Site(entry.sublattice, (x + dx, y + dy, z + dz), entry.axis)
        if not in_bounds(site, dims):
            return None
        placed.append(site)
    return tuple(placed)


def neighbors(site: Site, dims: LatticeDims, stencil: str) -> Optional[List[Site]]:
    """Sites of a named stencil anchored at `site`; None when the pattern protrudes out of the cuboid."""
    pattern = get_stencil(stencil)
    anchor = pattern.anchor
    if site.sublattice is not anchor.sublattice or site.axis is not anchor.axis:
        return None
    placed = place(pattern, site.cell, dims)
    return list(placed) if placed is not None else None


@lru_cache(maxsize=256)
def stencil_placements(name: str, dims: LatticeDims) -> Tuple[Tuple[Site, ...], ...]:
    """Every in-bounds placement of a stencil, anchors in enumeration order."""
    pattern = get_stencil(name)
    anchor = pattern.anchor
    placements = []
    for site in _family(anchor.sublattice, anchor.axis, dims):
        placed = place(pattern, site.cell, dims)
        if placed is not None:
            placements.append(placed)
    return tuple(placements)


# Perimeter bookkeeping


def perimeter_vertex_xz(k: int, dims: LatticeDims) -> Tuple[int, int]:
    """(x, z) of perimeter vertex k; k = 0 is the computation edge, then left, back, right, front."""
    W, D = dims.W, dims.D
    k %= dims.perimeter
    if k <= D:
        return 0, k
    if k <= D + W:
        return k - D, D
    if k <= 2 * D + W:
        return W, D - (k - D - W)
    return W - (k - 2 * D - W), 0


def perimeter_vertex(level: int, k: int, dims: LatticeDims) -> Site:
    x, z = perimeter_vertex_xz(k, dims)
    return Site(Sublattice.BLACK, (x, dims.H - level, z))


def perimeter_face(layer: int, r: int, dims: LatticeDims) -> Site:
    """Red perimeter face r of B layer `layer`; face r lies between vertices r and r+1."""
    W, D, H = dims.W, dims.D, dims.H
    r %= dims.perimeter
    y = H - 1 - layer
    if r < D:
        return Site(Sublattice.RED, (0, y, r), Axis.X)
    if r < D + W:
        return Site(Sublattice.RED, (r - D, y, D), Axis.Z)
    if r < 2 * D + W:
        return Site(Sublattice.RED, (W, y, 2 * D + W - 1 - r), Axis.X)
    return Site(Sublattice.RED, (dims.perimeter - 1 - r, y, 0), Axis.Z)


def perimeter_face_index(site: Site, dims: LatticeDims) -> Optional[int]:
    if site.sublattice is not Sublattice.RED:
        return None
    W, D = dims.W, dims.D
    x, _, z = site.cell
    if site.axis is Axis.X:
        if x == 0:
            return z
        if x == W:
            return 2 * D + W - 1 - z
        return None
    if z == D:
        return D + x
    if z == 0:
        return dims.perimeter - 1 - x
    return None


def is_right_face(r: int, dims: LatticeDims) -> bool:
    return dims.D + dims.W <= r % dims.perimeter < 2 * dims.D + dims.W


def b_layer_of(site: Site, dims: LatticeDims) -> int:
    return dims.H - 1 - site.cell[1]


def level_of(site: Site, dims: LatticeDims) -> int:
    return dims.H - site.cell[1]


def interior_corner_neighbor(level: int, k: int, dims: LatticeDims) -> Optional[Site]:
    """Interior black vertex diagonally inward from a non-edge vertical corner, one level down."""
    W, D = dims.W, dims.D
    if W < 2 or D < 2 or level + 1 > dims.H:
        return None
    corners = {D: (1, D - 1), D + W: (W - 1, D - 1), 2 * D + W: (W - 1, 1)}
    if k % dims.perimeter not in corners:
        return None
    x, z = corners[k % dims.perimeter]
    return Site(Sublattice.BLACK, (x, dims.H - level - 1, z))


def classify_region(site: Site, dims: LatticeDims) -> Region:
    """Geometric region of a site; used by tests and renderers only."""
    W, H, D = dims.W, dims.H, dims.D
    x, y, z = site.cell
    if site.sublattice is Sublattice.RED:
        if y == H - 1:
            return Region.TOP_B_LAYER
        r = perimeter_face_index(site, dims)
        if r is None:
            return Region.BULK
        if r in (0, dims.perimeter - 1):
            return Region.COMPUTATION_EDGE
        return Region.SIDE_FACE
    if x == 0 and z == 0:
        return Region.COMPUTATION_EDGE
    if y == H:
        return Region.TOP_A_LAYER
    if y == 0:
        return Region.BOTTOM_LAYER
    if site.sublattice is Sublattice.BLACK and (x in (0, W) or z in (0, D)):
        return Region.SIDE_FACE
    return Region.BULK


# Configurations


class Configuration:
    """Immutable assignment of a symbol to every site; black sites may be left unset (None)."""

    __slots__ = ("dims", "_symbols")

    def __init__(self, dims: LatticeDims, symbols: Iterable[Optional[SpinSymbol]]):
        self.dims = dims
        self._symbols: Tuple[Optional[SpinSymbol], ...] = tuple(symbols)
        sites = enumerate_sites(dims)
        if len(self._symbols) != len(sites):
            raise ValueError(f"expected {len(sites)} symbols, got {len(self._symbols)}")
        for site, symbol in zip(sites, self._symbols):
            if symbol is None:
                if site.sublattice is not Sublattice.BLACK:
                    raise ValueError(f"face site {site} must carry a symbol")
            elif symbol not in ALPHABETS[site.sublattice]:
                raise ValueError(f"symbol {symbol.value} does not belong to the {site.sublattice.value} alphabet")

    @classmethod
    def from_mapping(cls, dims: LatticeDims, mapping: Mapping[Site, Optional[SpinSymbol]]) -> "Configuration":
        return cls(dims, (mapping.get(site) for site in enumerate_sites(dims)))

    @property
    def symbols(self) -> Tuple[Optional[SpinSymbol], ...]:
        return self._symbols

    def __getitem__(self, site: Site) -> Optional[SpinSymbol]:
        return self._symbols[site_index(self.dims)[site]]

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and self.dims == other.dims and self._symbols == other._symbols

    def __hash__(self) -> int:
        return hash((self.dims, self._symbols))

    def items(self):
        return zip(enumerate_sites(self.dims), self._symbols)

    def with_symbols(self, changes: Mapping[Site, Optional[SpinSymbol]]) -> "Configuration":
        index = site_index(self.dims)
        symbols = list(self._symbols)
        for site, symbol in changes.items():
            symbols[index[site]] = symbol
        return Configuration(self.dims, symbols)

    def with_symbol(self, site: Site, symbol: Optional[SpinSymbol]) -> "Configuration":
        return self.with_symbols({site: symbol})

    def without_black(self) -> "Configuration":
        """Project black spins out to the unset placeholder."""
        return Configuration(
            self.dims,
            (None if site.sublattice is Sublattice.BLACK else s for site, s in self.items()),
        )
