from typing import Dict, List
from xml.sax.saxutils import escape

from cube_hamiltonian.lattice import Configuration, perimeter_face
from cube_hamiltonian.types import Axis, Site, SpinSymbol, Sublattice

GLYPHS: Dict[SpinSymbol, str] = {
    SpinSymbol.RX: "x",
    SpinSymbol.BIT0: "0",
    SpinSymbol.BIT1: "1",
    SpinSymbol.BANG: "!",
    SpinSymbol.ZERO: ".",
    SpinSymbol.A: "A",
    SpinSymbol.B: "B",
    SpinSymbol.C: "C",
    SpinSymbol.Q0: "o",
    SpinSymbol.Q1: "*",
    SpinSymbol.ARROW_R: ">",
    SpinSymbol.ARROW_L: "<",
}

COLORS: Dict[str, str] = {
    "x": "#d9d9d9",
    "0": "#ffffff",
    "1": "#e31a1c",
    "!": "#6a3d9a",
    ".": "#f7f7f7",
    "A": "#74c476",
    "B": "#31a354",
    "C": "#006d2c",
}

FACES = ("top", "side", "edge")


def _glyph(config: Configuration, site: Site) -> str:
    symbol = config[site]
    return GLYPHS[symbol] if symbol is not None else " "


def top_face_grid(config: Configuration) -> List[List[str]]:
    """Top B layer, back row first; Z faces on even rows, X faces on odd rows."""
    dims = config.dims
    W, H, D = dims.W, dims.H, dims.D
    y = H - 1
    rows = []
    for z in range(D, -1, -1):
        rows.append([_glyph(config, Site(Sublattice.RED, (x, y, z), Axis.Z)) for x in range(W)])
        if z > 0:
            rows.append([_glyph(config, Site(Sublattice.RED, (x, y, z - 1), Axis.X)) for x in range(W + 1)])
    return rows


def side_face_grid(config: Configuration) -> List[List[str]]:
    """Unrolled perimeter: one row per B layer, face index r left to right."""
    dims = config.dims
    return [
        [_glyph(config, perimeter_face(layer, r, dims)) for r in range(dims.perimeter)]
        for layer in range(dims.H)
    ]


def edge_column(config: Configuration) -> List[List[str]]:
    """Green faces along the computation edge, top level first."""
    dims = config.dims
    return [[_glyph(config, Site(Sublattice.GREEN, (0, dims.H - level, 0), Axis.Y))] for level in range(dims.H + 1)]


def face_grid(config: Configuration, face: str) -> List[List[str]]:
    if face == "top":
        return top_face_grid(config)
    if face == "side":
        return side_face_grid(config)
    if face == "edge":
        return edge_column(config)
    raise ValueError(f"unknown face {face!r}; expected one of {FACES}")


def render_ascii(config: Configuration, face: str) -> str:
    grid = face_grid(config, face)
    if face == "top":
        # X faces sit between Z faces
        lines = []
        for i, row in enumerate(grid):
            lines.append(("  " + "   ".join(row)) if i % 2 == 0 else "   ".join(row))
        return "\n".join(lines)
    return "\n".join(" ".join(row) for row in grid)


def render_svg(config: Configuration, face: str, cell: int = 28) -> str:
    grid = face_grid(config, face)
    width = cell * max(len(row) for row in grid) + 2 * cell
    height = cell * len(grid) + 2 * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{cell}" y="{cell * 0.7:.1f}" font-family="monospace" font-size="12">'
        f"{escape(face)} face, dims {escape(config.dims.label())}</text>",
    ]
    for i, row in enumerate(grid):
        indent = cell / 2 if face == "top" and i % 2 == 0 else 0.0
        for j, glyph in enumerate(row):
            x = cell + indent + j * cell
            y = cell + i * cell
            fill = COLORS.get(glyph, "#ffffff")
            parts.append(
                f'<rect x="{x:.1f}" y="{y}" width="{cell - 2}" height="{cell - 2}" fill="{fill}" stroke="#555"/>'
            )
            parts.append(
                f'<text x="{x + cell / 2 - 1:.1f}" y="{y + cell * 0.65:.1f}" text-anchor="middle" '
                f'font-family="monospace" font-size="13">{escape(glyph)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def render_face(config: Configuration, face: str, fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(config, face)
    if fmt == "svg":
        return render_svg(config, face)
    raise ValueError(f"unknown render format {fmt!r}")

