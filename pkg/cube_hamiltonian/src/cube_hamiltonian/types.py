import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cube_hamiltonian.constants import TOL_RANGE


class Sublattice(str, Enum):
    BLACK = "black"
    RED = "red"
    GREEN = "green"


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


class SpinSymbol(str, Enum):
    # black
    Q0 = "Q0"
    Q1 = "Q1"
    ARROW_R = "ArrowR"
    ARROW_L = "ArrowL"
    # red
    RX = "Rx"
    BIT0 = "Bit0"
    BIT1 = "Bit1"
    BANG = "Bang"
    # green
    ZERO = "Zero"
    A = "A"
    B = "B"
    C = "C"

    @property
    def is_head(self) -> bool:
        return self in (SpinSymbol.ARROW_R, SpinSymbol.ARROW_L, SpinSymbol.BANG)


ALPHABETS: Dict[Sublattice, Tuple[SpinSymbol, ...]] = {
    Sublattice.BLACK: (SpinSymbol.Q0, SpinSymbol.Q1, SpinSymbol.ARROW_R, SpinSymbol.ARROW_L),
    Sublattice.RED: (SpinSymbol.RX, SpinSymbol.BIT0, SpinSymbol.BIT1, SpinSymbol.BANG),
    Sublattice.GREEN: (SpinSymbol.ZERO, SpinSymbol.A, SpinSymbol.B, SpinSymbol.C),
}

BIT_SYMBOLS = (SpinSymbol.BIT0, SpinSymbol.BIT1)


class Region(str, Enum):
    TOP_B_LAYER = "TopBLayer"
    TOP_A_LAYER = "TopALayer"
    SIDE_FACE = "SideFace"
    COMPUTATION_EDGE = "ComputationEdge"
    BOTTOM_LAYER = "BottomLayer"
    BULK = "Bulk"


class GateTag(str, Enum):
    IDENTITY = "I"
    G = "G"
    GDAG = "Gd"


class LatticeDims(BaseModel):
    model_config = ConfigDict(frozen=True)

    W: int = Field(ge=1)
    H: int = Field(ge=1)
    D: int = Field(ge=1)

    @property
    def perimeter(self) -> int:
        return 2 * (self.W + self.D)

    @classmethod
    def parse(cls, text: str) -> "LatticeDims":
        """Parse the CLI form "W,H,D"."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected W,H,D but got {text!r}")
        w, h, d = (int(p) for p in parts)
        return cls(W=w, H=h, D=d)

    def label(self) -> str:
        return f"{self.W},{self.H},{self.D}"


@dataclass(frozen=True, order=True)
class Site:
    """A lattice site: a black vertex or the center of a red/green face.

    `cell` is the vertex itself, or the integer lower corner of the face.
    """

    sublattice: Sublattice
    cell: Tuple[int, int, int]
    axis: Optional[Axis] = None

    def __post_init__(self):
        if self.sublattice is Sublattice.BLACK and self.axis is not None:
            raise ValueError("black vertices carry no orientation")
        if self.sublattice is not Sublattice.BLACK and self.axis is None:
            raise ValueError("face sites need a normal axis")

    def shifted(self, dx: int, dy: int, dz: int) -> "Site":
        x, y, z = self.cell
        return Site(self.sublattice, (x + dx, y + dy, z + dz), self.axis)


# Error hierarchy


class WorkbenchError(Exception):
    """Base class for every failure the workbench reports."""


class DegenerateInstanceError(WorkbenchError):
    pass


class StaticViolationError(WorkbenchError):
    def __init__(self, term: str, anchor: Optional[Site] = None, detail: str = ""):
        self.term = term
        self.anchor = anchor
        where = f" at {anchor}" if anchor is not None else ""
        super().__init__(f"static term {term!r} violated{where}{': ' + detail if detail else ''}")


class UnknownStencilError(WorkbenchError):
    pass


class RuleSetError(WorkbenchError):
    pass


class SimplicityError(WorkbenchError):
    pass


class TableFormatError(WorkbenchError):
    pass


class UnrealizableProgramError(WorkbenchError):
    pass


class DimensionOverflowError(WorkbenchError):
    pass


class ConvergenceError(WorkbenchError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class SynthesisError(WorkbenchError):
    def __init__(self, message: str, best_distance: float, best_word: Optional[List[str]] = None):
        self.best_distance = best_distance
        self.best_word = best_word or []
        super().__init__(f"{message} (best distance {best_distance:.3e})")


class InvalidInstanceError(WorkbenchError):
    pass


# Records shared across modules


class SiteModel(BaseModel):
    sub: Sublattice
    cell: Tuple[int, int, int]
    axis: Optional[Axis] = None

    @classmethod
    def from_site(cls, site: Site) -> "SiteModel":
        return cls(sub=site.sublattice, cell=site.cell, axis=site.axis)

    def to_site(self) -> Site:
        return Site(self.sub, tuple(self.cell), self.axis)


class SiteSymbol(SiteModel):
    symbol: SpinSymbol


class ConfigurationReport(BaseModel):
    dims: LatticeDims
    energy: str
    edge_program: Optional[str] = None
    sites: List[SiteSymbol] = Field(default_factory=list)


class CubeParams(BaseModel):
    W: int
    H: int
    D: int
    ring_size: int
    qubit_block: int
    qrm_steps: int
    qubits_needed: int

    @model_validator(mode="after")
    def check_side_lengths(self):
        if self.H < 2 * self.qrm_steps * (self.W + self.D):
            raise ValueError("H must be at least 2t(W+D)")
        if (self.W + self.D) % self.qubit_block != 0:
            raise ValueError("W+D must be a multiple of the qubit block size")
        return self


class PenaltyWeights(BaseModel):
    head_pair: float = 1.0
    input: float = 1.0
    output: float = 1.0
    g: float = 0.0
    A: Optional[float] = None
    B: Optional[float] = None

    @classmethod
    def from_no_bound(cls, inverse_b: float, dims: LatticeDims, **kwargs) -> "PenaltyWeights":
        """Fix B from the no-instance bound and set A = 4 B W H D, g = 2/A."""
        if inverse_b <= 0:
            raise InvalidInstanceError("no-instance energy must be positive to fix B")
        b = 1.0 / inverse_b
        a = 4.0 * b * dims.W * dims.H * dims.D
        return cls(g=2.0 / a, A=a, B=b, **kwargs)

    def check_bookkeeping(self, dims: LatticeDims) -> bool:
        if self.A is None or self.B is None:
            return self.g == 0.0
        bound = 4.0 * self.B * dims.W * dims.H * dims.D
        return self.A >= bound * (1 - 1e-12) and math.isclose(self.g, 2.0 / self.A, rel_tol=1e-12)


class UniversalityReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    rank: int
    independent_count: int
    dimension: int
    passed: bool = Field(alias="pass")
    max_hermitian_residual: float
    max_trace_residual: float
    spot_check_residual: float
    raw_generator_traces: List[float] = Field(default_factory=list)


class SimplicityReport(BaseModel):
    simple: bool
    max_residual: float
    witness_loop: List[int] = Field(default_factory=list)


class KitaevReport(BaseModel):
    lambda_min: float
    mu: Optional[float] = None
    vertex_count: int
    ratio: Optional[float] = None
    penalized_vertices: List[int] = Field(default_factory=list)
    vacuous: bool = False
    note: Optional[str] = None


class SectorEnergy(BaseModel):
    sector: str
    heads: int
    lambda_min: float
    bound: float
    holds: bool


class GapReport(BaseModel):
    dims: LatticeDims
    yes_program: str
    no_program: str
    lambda_yes: float
    lambda_no: float
    A: float
    B: float
    g: float
    yes_vertices: int
    no_vertices: int
    qubits: int
    sectors: List[SectorEnergy] = Field(default_factory=list)
    passed: bool


class SpectrumReport(BaseModel):
    dims: LatticeDims
    program: Optional[str] = None
    vertex_count: int = Field(serialization_alias="|V|")
    q: int
    lambda_min: float
    gap: Optional[float] = None
    sector: str = "single-head"
    low_spectrum: List[float] = Field(default_factory=list)


class SuiteReport(BaseModel):
    suite: str
    passed: bool
    checks: Dict[str, bool] = Field(default_factory=dict)
    details: Dict[str, object] = Field(default_factory=dict)


class WorkbenchSettings(BaseModel):
    simplicity_tol: float
    kernel_tol: float
    spectrum_tol: float
    rank_rel_tol: float
    vertex_budget: int
    dense_eigen_limit: int
    synthesis_max_len: int
    synthesis_epsilon: float
    threads: Optional[int] = None
    demo_dims: str
    demo_yes_program: str
    demo_no_program: str


class RunConfig(BaseModel):
    subcommand: str
    dims: Optional[LatticeDims] = None
    program: Optional[str] = None
    tol: Optional[float] = None
    json_path: Optional[str] = None
    render: Optional[str] = None
    render_format: str = "svg"
    suite: Optional[str] = None
    output: Optional[str] = None
    yes_program: Optional[str] = None
    no_program: Optional[str] = None
    input_bits: Optional[str] = None
    target: Optional[str] = None
    max_len: Optional[int] = Field(default=None, ge=0)
    k: int = Field(default=4, ge=1)
    verbose: bool = False

    @field_validator("program", "yes_program", "no_program", "input_bits")
    @classmethod
    def check_program(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and (not value or set(value) - {"0", "1"}):
            raise ValueError("program must be a non-empty bit string")
        return value

    @field_validator("render_format")
    @classmethod
    def check_format(cls, value: str) -> str:
        if value not in ("ascii", "svg"):
            raise ValueError("render format must be ascii or svg")
        return value

    @field_validator("tol")
    @classmethod
    def check_tol(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (TOL_RANGE[0] <= value <= TOL_RANGE[1]):
            raise ValueError(f"tolerance must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")
        return value
