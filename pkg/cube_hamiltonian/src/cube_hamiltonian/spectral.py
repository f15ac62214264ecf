"""Restricted Hamiltonians on unitary labeled graphs and the promise-gap analysis."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from cube_hamiltonian.constants import (
    DENSE_EIGEN_LIMIT,
    KERNEL_TOL,
    SIMPLICITY_TOL,
    SPARSE_EIGEN_LIMIT,
    SPECTRUM_TOL,
)
from cube_hamiltonian.dynamics import (
    ULG,
    ClockConfig,
    EdgeTape,
    build_ulg,
    explore_ulg,
    frame_unitaries,
    head_count,
    heads_adjacent,
    history_state,
    seed_multi_head,
    ulg_to_networkx,
    zero_head_config,
)
from cube_hamiltonian.types import (
    ConvergenceError,
    DimensionOverflowError,
    GapReport,
    InvalidInstanceError,
    KitaevReport,
    LatticeDims,
    PenaltyWeights,
    SectorEnergy,
    SimplicityError,
    SpectrumReport,
    SpinSymbol,
)

logger = logging.getLogger(__name__)

ACCEPT = np.array([[0, 0], [0, 1]], dtype=complex)
REJECT = np.eye(2, dtype=complex) - ACCEPT


@dataclass
class RestrictedHamiltonian:
    matrix: scipy.sparse.csr_matrix
    vertex_count: int
    q: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def slot_projector(q: int, slot: int, local: np.ndarray) -> np.ndarray:
    """2x2 operator on one register slot; slot 0 is the most significant factor."""
    return np.kron(np.kron(np.eye(2**slot), local), np.eye(2 ** (q - slot - 1)))


def guard_dimension(ulg: ULG, limit: int = SPARSE_EIGEN_LIMIT) -> None:
    dimension = ulg.vertex_count * 2**ulg.q
    if dimension > limit:
        raise DimensionOverflowError(
            f"restricted Hamiltonian of dimension {dimension} exceeds the {limit} limit"
        )


class _Blocks:
    """COO accumulator for a vertex-by-vertex block matrix."""

    def __init__(self, vertex_count: int, block: int):
        self.block = block
        self.shape = (vertex_count * block, vertex_count * block)
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []

    def add(self, u: int, v: int, matrix: np.ndarray) -> None:
        r, c = np.nonzero(matrix)
        self.rows.append(u * self.block + r)
        self.cols.append(v * self.block + c)
        self.vals.append(matrix[r, c])

    def build(self) -> scipy.sparse.csr_matrix:
        if not self.rows:
            return scipy.sparse.csr_matrix(self.shape, dtype=complex)
        data = (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols)))
        return scipy.sparse.coo_matrix(data, shape=self.shape, dtype=complex).tocsr()


def _add_propagation(blocks: _Blocks, ulg: ULG) -> None:
    eye = np.eye(2**ulg.q, dtype=complex)
    for edge in ulg.edges:
        u, v = edge.source, edge.target
        operator = edge.operator(ulg.q)
        blocks.add(u, u, eye)
        blocks.add(v, v, eye)
        blocks.add(v, u, -operator)
        blocks.add(u, v, -operator.conj().T)


def penalty_projectors(ulg: ULG, accept: np.ndarray = ACCEPT) -> Dict[int, np.ndarray]:
    """Input check on the initial vertex and output check on every terminal, as projectors."""
    projectors: Dict[int, np.ndarray] = {}
    q = ulg.q
    if ulg.input_slot is not None:
        projectors[ulg.initial] = slot_projector(q, ulg.input_slot, ACCEPT)
    reject = np.eye(2, dtype=complex) - accept
    for t in ulg.terminals:
        output = slot_projector(q, ulg.output_slots[t], reject)
        projectors[t] = projectors[t] + output if t in projectors else output
    return projectors


def assemble(
    ulg: ULG,
    weights: Optional[PenaltyWeights] = None,
    accept: np.ndarray = ACCEPT,
    penalties: Optional[Dict[int, np.ndarray]] = None,
) -> RestrictedHamiltonian:
    """H_prop + input/output checks + head-pair penalty - g * (number of heads).

    `penalties` replaces the derived input/output projectors when given.
    """
    weights = weights or PenaltyWeights()
    guard_dimension(ulg)
    q = ulg.q
    eye = np.eye(2**q, dtype=complex)
    blocks = _Blocks(ulg.vertex_count, 2**q)
    _add_propagation(blocks, ulg)

    if penalties is None:
        if ulg.input_slot is not None and weights.input:
            blocks.add(ulg.initial, ulg.initial, weights.input * slot_projector(q, ulg.input_slot, ACCEPT))
        reject = np.eye(2, dtype=complex) - accept
        for t in ulg.terminals:
            if weights.output:
                blocks.add(t, t, weights.output * slot_projector(q, ulg.output_slots[t], reject))
    else:
        for v, projector in penalties.items():
            blocks.add(v, v, np.asarray(projector, dtype=complex))

    for v, vertex in enumerate(ulg.vertices):
        if not isinstance(vertex, ClockConfig):
            continue
        if weights.head_pair and heads_adjacent(vertex):
            blocks.add(v, v, weights.head_pair * eye)
        if weights.g and head_count(vertex):
            blocks.add(v, v, -weights.g * head_count(vertex) * eye)
    return RestrictedHamiltonian(blocks.build(), ulg.vertex_count, q)


def propagation_hamiltonian(ulg: ULG) -> RestrictedHamiltonian:
    blocks = _Blocks(ulg.vertex_count, 2**ulg.q)
    _add_propagation(blocks, ulg)
    return RestrictedHamiltonian(blocks.build(), ulg.vertex_count, ulg.q)


# Eigensolvers


def low_spectrum(
    h: RestrictedHamiltonian, k: int = 1, dense_limit: int = DENSE_EIGEN_LIMIT
) -> Tuple[np.ndarray, np.ndarray]:
    """Lowest k eigenvalues and eigenvectors, ascending."""
    k = min(k, h.dimension)
    if h.dimension <= dense_limit:
        values, vectors = scipy.linalg.eigh(h.dense(), subset_by_index=[0, k - 1])
        return values, vectors
    values, vectors = scipy.sparse.linalg.eigsh(h.matrix, k=k, which="SA")
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    residual = max(
        float(np.linalg.norm(h.matrix @ vectors[:, i] - values[i] * vectors[:, i])) for i in range(k)
    )
    if residual > 1e-8 * max(1.0, float(np.max(np.abs(values)))):
        raise ConvergenceError("sparse eigensolver did not converge", residual)
    return values, vectors


def ground_energy(h: RestrictedHamiltonian, dense_limit: int = DENSE_EIGEN_LIMIT) -> float:
    values, _ = low_spectrum(h, 1, dense_limit)
    return float(values[0])


# Structural checks


def _operator_norm(matrix: scipy.sparse.spmatrix, dense_limit: int = DENSE_EIGEN_LIMIT) -> float:
    """Spectral norm for small matrices, the Frobenius upper bound otherwise."""
    if matrix.shape[0] <= dense_limit:
        return float(np.linalg.norm(matrix.toarray(), 2))
    return float(scipy.sparse.linalg.norm(matrix))


def laplacian_equivalence(ulg: ULG, tol: float = SIMPLICITY_TOL) -> float:
    """|| W H_prop W^dagger - Laplacian (x) 1 || with W the block frame rotation."""
    result = frame_unitaries(ulg, tol)
    if not result.report.simple:
        raise SimplicityError(f"graph is not simple (loop mismatch {result.report.max_residual:.3e})")
    h = propagation_hamiltonian(ulg).matrix
    rotation = scipy.sparse.block_diag([result.frames[v].conj().T for v in range(ulg.vertex_count)], format="csr")
    laplacian = nx.laplacian_matrix(ulg_to_networkx(ulg), nodelist=range(ulg.vertex_count))
    target = scipy.sparse.kron(laplacian, scipy.sparse.identity(2**ulg.q), format="csr")
    difference = rotation @ h @ rotation.conj().T - target
    return _operator_norm(difference)


def kernel_residual(ulg: ULG, input_state: np.ndarray) -> float:
    """|| H_prop |history> || for the history state of `input_state`."""
    psi = history_state(ulg, input_state).vector()
    return float(np.linalg.norm(propagation_hamiltonian(ulg).matrix @ psi))


def monotonicity_check(
    ulg: ULG,
    weights: Optional[PenaltyWeights] = None,
    seed: int = 0,
    trials: int = 3,
    tol: float = SPECTRUM_TOL,
) -> bool:
    """Deleting edges never raises the lowest eigenvalue."""
    full = ground_energy(assemble(ulg, weights))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        keep = rng.random(len(ulg.edges)) >= 0.3
        pruned = ULG(
            ulg.vertices,
            [e for e, k in zip(ulg.edges, keep) if k],
            ulg.q,
            ulg.initial,
            ulg.terminals,
            ulg.input_slot,
            ulg.output_slots,
        )
        if ground_energy(assemble(pruned, weights)) > full + tol:
            return False
    return True


# Penalty bound on a path of frames


def _penalty_overlap(frames: Dict[int, np.ndarray], projectors: Dict[int, np.ndarray]) -> Optional[float]:
    vertices = sorted(projectors)
    if len(vertices) < 2:
        return None
    complements = {}
    for v in vertices:
        frame = frames[v]
        allowed = np.eye(frame.shape[0]) - projectors[v]
        complements[v] = frame.conj().T @ allowed @ frame
    mu = 1.0
    for i, a in enumerate(vertices):
        for b in vertices[i + 1 :]:
            overlap = np.linalg.norm(complements[a] @ complements[b], 2)
            mu = min(mu, 1.0 - overlap**2)
    return float(mu)


def kitaev_bound_check(
    ulg: ULG,
    penalties: Optional[Dict[int, np.ndarray]] = None,
    accept: np.ndarray = ACCEPT,
    tol: float = SIMPLICITY_TOL,
) -> KitaevReport:
    """Lowest eigenvalue of H_prop + sum of projector penalties against the
    mu / |V|^3 scaling, with mu = min over penalty pairs of 1 - ||N_i N_j||^2."""
    projectors = penalties if penalties is not None else penalty_projectors(ulg, accept)
    result = frame_unitaries(ulg, tol)
    if not result.report.simple:
        raise SimplicityError(f"graph is not simple (loop mismatch {result.report.max_residual:.3e})")

    lam = ground_energy(assemble(ulg, PenaltyWeights(head_pair=0.0), accept, penalties=projectors))
    mu = _penalty_overlap(result.frames, projectors)
    vertex_count = ulg.vertex_count
    if mu is None:
        return KitaevReport(
            lambda_min=lam, vertex_count=vertex_count, penalized_vertices=sorted(projectors),
            vacuous=True, note="fewer than two penalized vertices",
        )
    if mu <= tol:
        return KitaevReport(
            lambda_min=lam, mu=mu, vertex_count=vertex_count, penalized_vertices=sorted(projectors),
            vacuous=True, note="penalties share an allowed state",
        )
    return KitaevReport(
        lambda_min=lam,
        mu=mu,
        vertex_count=vertex_count,
        ratio=lam * vertex_count**3 / mu,
        penalized_vertices=sorted(projectors),
    )


def kitaev_constant(reports: Sequence[KitaevReport]) -> float:
    """Ratio on the smallest non-vacuous instance."""
    usable = [r for r in reports if not r.vacuous]
    if not usable:
        raise ValueError("no non-vacuous report to calibrate on")
    return min(usable, key=lambda r: r.vertex_count).ratio


# Promise gap


def acceptance_probability(ulg: ULG, accept: np.ndarray = ACCEPT) -> float:
    """Best acceptance over witnesses with the ancilla (slot 0) in |0>."""
    if not ulg.terminals:
        raise InvalidInstanceError("computation never reaches a terminal configuration")
    frames = frame_unitaries(ulg).frames
    q = ulg.q
    ancilla_zero = slot_projector(q, 0, REJECT)
    best = 0.0
    for t in ulg.terminals:
        measured = slot_projector(q, ulg.output_slots[t], accept)
        operator = ancilla_zero @ frames[t].conj().T @ measured @ frames[t] @ ancilla_zero
        best = max(best, float(np.max(np.linalg.eigvalsh((operator + operator.conj().T) / 2))))
    return best


def _sector(name: str, ulg: ULG, weights: PenaltyWeights, bound: float, tol: float) -> SectorEnergy:
    lam = ground_energy(assemble(ulg, weights))
    heads = head_count(ulg.vertices[ulg.initial])
    return SectorEnergy(sector=name, heads=heads, lambda_min=lam, bound=bound, holds=lam >= bound - tol)


def sector_energies(tape: EdgeTape, weights: PenaltyWeights, tol: float = SPECTRUM_TOL) -> List[SectorEnergy]:
    """Zero-head and two-head sectors; both must stay non-negative.

    The zero-head sector has no transitions, so its energy is exactly 0. In the
    two-head sector both arrows move.
    """
    L = tape.dims.perimeter
    empty = explore_ulg(zero_head_config(tape))
    pair = explore_ulg(seed_multi_head(tape, [(SpinSymbol.ARROW_R, 0), (SpinSymbol.ARROW_R, L // 2)]))
    return [
        _sector("zero-head", empty, weights, 0.0, tol),
        _sector("two-head", pair, weights, 0.0, tol),
    ]


def promise_gap_demo(
    dims: LatticeDims,
    yes_program: str,
    no_program: str,
    tol: float = SPECTRUM_TOL,
) -> GapReport:
    """Fix B from the no instance, then check lambda_yes <= -1/A and lambda_no >= 0."""
    yes_ulg = build_ulg(EdgeTape.from_program(dims, yes_program))
    no_tape = EdgeTape.from_program(dims, no_program)
    no_ulg = build_ulg(no_tape)
    for ulg in (yes_ulg, no_ulg):
        guard_dimension(ulg)

    p_yes, p_no = acceptance_probability(yes_ulg), acceptance_probability(no_ulg)
    if p_yes < 1.0 - 1e-9 or p_no > 1e-9:
        raise InvalidInstanceError(
            f"programs must accept deterministically and reject deterministically; got {p_yes:.3g} and {p_no:.3g}"
        )

    no_penalty = ground_energy(assemble(no_ulg, PenaltyWeights()))
    weights = PenaltyWeights.from_no_bound(no_penalty, dims)
    lambda_yes = ground_energy(assemble(yes_ulg, weights))
    lambda_no = ground_energy(assemble(no_ulg, weights))
    sectors = sector_energies(no_tape, weights, tol)

    passed = (
        lambda_yes <= -1.0 / weights.A + tol
        and lambda_no >= -tol
        and all(s.holds for s in sectors)
        and weights.check_bookkeeping(dims)
    )
    logger.info(
        "promise gap on %s: lambda_yes=%.3e lambda_no=%.3e A=%.3e", dims.label(), lambda_yes, lambda_no, weights.A
    )
    return GapReport(
        dims=dims,
        yes_program=yes_program,
        no_program=no_program,
        lambda_yes=lambda_yes,
        lambda_no=lambda_no,
        A=weights.A,
        B=weights.B,
        g=weights.g,
        yes_vertices=yes_ulg.vertex_count,
        no_vertices=no_ulg.vertex_count,
        qubits=yes_ulg.q,
        sectors=sectors,
        passed=passed,
    )


def spectrum_report(
    dims: LatticeDims,
    program: Optional[str] = None,
    weights: Optional[PenaltyWeights] = None,
    k: int = 4,
    dense_limit: int = DENSE_EIGEN_LIMIT,
) -> SpectrumReport:
    """Low spectrum of the single-head sector for a program tape or the solved ground."""
    tape = EdgeTape.from_program(dims, program) if program else EdgeTape.from_ground(dims)
    ulg = build_ulg(tape)
    values, _ = low_spectrum(assemble(ulg, weights), k, dense_limit)
    gap = float(values[1] - values[0]) if len(values) > 1 else None
    return SpectrumReport(
        dims=dims,
        program=tape.program,
        vertex_count=ulg.vertex_count,
        q=ulg.q,
        lambda_min=float(values[0]),
        gap=gap,
        low_spectrum=[float(v) for v in values],
    )


def check_kernel(ulg: ULG, input_state: np.ndarray, tol: float = KERNEL_TOL) -> bool:
    return kernel_residual(ulg, input_state) <= tol
