#!/usr/bin/env python
import argparse
import asyncio
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from cube_hamiltonian.constants import (
    EXIT_INVALID_INSTANCE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    SU8_DIMENSION,
)
from cube_hamiltonian.dynamics import (
    EdgeTape,
    apply_rules,
    apply_rules_backward,
    build_transition_rules,
    build_ulg,
    canonical_start,
    check_simplicity,
    forward_walk,
    is_terminal,
    register_ring_order,
    terminal_ring_state,
)
from cube_hamiltonian.program import (
    apply_two_qubit,
    basis_state,
    check_universality,
    encode_circuit,
    gate_matrix,
    parse_gate_word,
    permute_register,
    simulate_ring,
    synthesize,
    word_unitary,
)
from cube_hamiltonian.spectral import (
    kernel_residual,
    kitaev_bound_check,
    kitaev_constant,
    laplacian_equivalence,
    monotonicity_check,
    promise_gap_demo,
    spectrum_report,
)
from cube_hamiltonian.statics import (
    counter_front_string,
    counter_tile,
    edge_sequence,
    enumerate_counter_tilings,
    find_zero_energy_configurations,
    ground_gap_holds,
    solve_static_ground,
    static_energy,
)
from cube_hamiltonian.types import (
    DegenerateInstanceError,
    DimensionOverflowError,
    GateTag,
    InvalidInstanceError,
    LatticeDims,
    RunConfig,
    SuiteReport,
    UnrealizableProgramError,
    WorkbenchError,
    WorkbenchSettings,
)
from cube_hamiltonian.utils.configUtils import load_settings
from cube_hamiltonian.utils.graphUtils import export_graph
from cube_hamiltonian.utils.renderUtils import FACES, render_face
from cube_hamiltonian.utils.reportUtils import configuration_report, report_json, write_report

logger = logging.getLogger(__name__)

SUITE_NAMES = ("universality", "tiles", "dynamics", "spectral")
INVALID_INSTANCE = (DegenerateInstanceError, UnrealizableProgramError, DimensionOverflowError, InvalidInstanceError)

# (W, D, circuit) on rings of three and five qubits; H is the program length
TOY_CIRCUITS = [
    (1, 1, [(GateTag.G, 1)]),
    (1, 1, [(GateTag.G, 0), (GateTag.GDAG, 2)]),
    (2, 1, [(GateTag.GDAG, 3), (GateTag.G, 1)]),
    (1, 2, [(GateTag.G, 4)]),
]


def toy_tape(W: int, D: int, circuit) -> EdgeTape:
    n = 2 * (W + D) - 1
    program = encode_circuit(circuit, n)
    return EdgeTape.from_program(LatticeDims(W=W, H=len(program), D=D), program)


def _random_state(q: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2**q) + 1j * rng.normal(size=2**q)
    return psi / np.linalg.norm(psi)


# Verification suites. Each is a pure function of the settings.


def suite_universality(settings: WorkbenchSettings) -> SuiteReport:
    report = check_universality(rel_tol=settings.rank_rel_tol)
    checks = {
        "rank": report.rank == SU8_DIMENSION,
        "hermitian": report.max_hermitian_residual <= 1e-12,
        "traceless": report.max_trace_residual <= 1e-12,
        "spot_check": report.spot_check_residual <= 1e-12,
    }
    return SuiteReport(suite="universality", passed=all(checks.values()), checks=checks,
                       details=report.model_dump(by_alias=True))


def suite_tiles(settings: WorkbenchSettings) -> SuiteReport:
    checks = {}
    checks["tile_semantics"] = all(
        counter_tile(a, b).s == a ^ b and counter_tile(a, b).c == a & b for a in (0, 1) for b in (0, 1)
    )
    checks["counter"] = all(
        counter_front_string(LatticeDims(W=7, H=1, D=D)) == format(D % 2**7, "07b") for D in range(1, 65)
    )
    checks["unique_tiling"] = all(
        len(enumerate_counter_tilings(W, D, limit=2)) == 1 for W in (2, 3) for D in range(1, 9)
    )
    dims = LatticeDims(W=2, H=2, D=2)
    ground = solve_static_ground(dims)
    checks["ground_energy"] = static_energy(ground) == 0
    checks["ground_unique"] = find_zero_energy_configurations(dims, limit=2) == [ground]
    checks["ground_gap"] = ground_gap_holds(dims)
    return SuiteReport(suite="tiles", passed=all(checks.values()), checks=checks)


def suite_dynamics(settings: WorkbenchSettings) -> SuiteReport:
    rng = np.random.default_rng(7)
    rules = build_transition_rules()
    checks: Dict[str, bool] = {}
    details: Dict[str, object] = {}
    for i, (W, D, circuit) in enumerate(TOY_CIRCUITS):
        tape = toy_tape(W, D, circuit)
        ulg = build_ulg(tape, budget=settings.vertex_budget)
        n = tape.ring_size
        psi = _random_state(n, rng)

        reversible = True
        for config in ulg.vertices:
            for transition in apply_rules(config, rules):
                back = apply_rules_backward(transition.target, rules)
                reversible &= any(b.source == config for b in back)
        expected = simulate_ring(tape.program, n, psi, levels=tape.dims.H)
        fidelity = abs(np.vdot(expected, terminal_ring_state(ulg, psi))) ** 2

        checks[f"toy{i}_reversible"] = reversible
        checks[f"toy{i}_simple"] = check_simplicity(ulg, settings.simplicity_tol).simple
        checks[f"toy{i}_kernel"] = kernel_residual(ulg, psi) <= settings.kernel_tol
        checks[f"toy{i}_terminal"] = fidelity >= 1 - 1e-10
        details[f"toy{i}"] = {"program": tape.program, "|V|": ulg.vertex_count, "q": ulg.q}
    return SuiteReport(suite="dynamics", passed=all(checks.values()), checks=checks, details=details)


def suite_spectral(settings: WorkbenchSettings) -> SuiteReport:
    checks: Dict[str, bool] = {}
    tape = toy_tape(*TOY_CIRCUITS[1])
    ulg = build_ulg(tape, budget=settings.vertex_budget)
    checks["laplacian"] = laplacian_equivalence(ulg, settings.simplicity_tol) <= settings.simplicity_tol
    checks["monotone"] = monotonicity_check(ulg, tol=settings.spectrum_tol)

    dims = LatticeDims.parse(settings.demo_dims)
    gap = promise_gap_demo(dims, settings.demo_yes_program, settings.demo_no_program, settings.spectrum_tol)
    checks["promise_gap"] = gap.passed

    reports = [kitaev_bound_check(build_ulg(EdgeTape.from_program(LatticeDims(W=1, H=h, D=1), "0"))) for h in (2, 4, 6)]
    c0 = kitaev_constant(reports)
    checks["kitaev"] = all(r.ratio >= c0 * (1 - 1e-9) for r in reports)
    return SuiteReport(
        suite="spectral", passed=all(checks.values()), checks=checks,
        details={"gap": gap.model_dump(), "kitaev_c0": c0},
    )


SUITES: Dict[str, Callable[[WorkbenchSettings], SuiteReport]] = {
    "universality": suite_universality,
    "tiles": suite_tiles,
    "dynamics": suite_dynamics,
    "spectral": suite_spectral,
}


async def run_suites(names: List[str], settings: WorkbenchSettings) -> List[SuiteReport]:
    loop = asyncio.get_running_loop()
    if settings.threads:
        loop.set_default_executor(ThreadPoolExecutor(max_workers=settings.threads))
    tasks = [asyncio.to_thread(SUITES[name], settings) for name in names]
    return list(await asyncio.gather(*tasks))


# Subcommands


def cmd_tiles(config: RunConfig, settings: WorkbenchSettings) -> int:
    print(f"1. Solving static ground for dims {config.dims.label()}")
    ground = solve_static_ground(config.dims)
    program = "".join(str(b) for b in edge_sequence(ground))
    print(f"2. Ground energy {static_energy(ground)}, edge program {program}")
    if config.render:
        text = render_face(ground, config.render, config.render_format)
        _emit_text(text, config.output)
    write_report(configuration_report(ground, program), config.json_path)
    return EXIT_OK


def cmd_verify(config: RunConfig, settings: WorkbenchSettings) -> int:
    names = list(SUITE_NAMES) if config.suite == "all" else [config.suite]
    reports = asyncio.run(run_suites(names, settings))
    passed = all(r.passed for r in reports)
    for report in reports:
        logger.info("suite %s: %s", report.suite, "pass" if report.passed else "FAIL")
    summary = SuiteReport(
        suite=config.suite,
        passed=passed,
        checks={f"{r.suite}.{k}": v for r in reports for k, v in r.checks.items()},
        details={r.suite: r.details for r in reports},
    )
    _emit_report(summary, config.json_path)
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_universality(config: RunConfig, settings: WorkbenchSettings) -> int:
    report = check_universality(rel_tol=settings.rank_rel_tol)
    _emit_report(report, config.json_path)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_demo(config: RunConfig, settings: WorkbenchSettings) -> int:
    dims = config.dims or LatticeDims.parse(settings.demo_dims)
    yes = config.yes_program or settings.demo_yes_program
    no = config.no_program or settings.demo_no_program
    print(f"1. Building yes instance {yes} and no instance {no} on dims {dims.label()}")
    report = promise_gap_demo(dims, yes, no, settings.spectrum_tol)
    print(f"2. lambda_yes = {report.lambda_yes:.6e}, lambda_no = {report.lambda_no:.6e}")
    for sector in report.sectors:
        print(f"   {sector.sector}: lambda = {sector.lambda_min:.6e} (bound {sector.bound})")
    _emit_report(report, config.json_path)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_spectrum(config: RunConfig, settings: WorkbenchSettings) -> int:
    report = spectrum_report(config.dims, config.program, k=config.k, dense_limit=settings.dense_eigen_limit)
    _emit_report(report, config.json_path)
    return EXIT_OK


def cmd_evolve(config: RunConfig, settings: WorkbenchSettings) -> int:
    """One JSON line per step of the forward walk, then the register in ring order."""
    dims = config.dims
    tape = EdgeTape.from_program(dims, config.program) if config.program else EdgeTape.from_ground(dims)
    n = tape.ring_size
    bits = [int(c) for c in (config.input_bits or "0" * n)]
    if len(bits) != n:
        raise ValueError(f"input needs {n} bits for dims {dims.label()}")
    state = basis_state(bits)
    walk = forward_walk(tape, budget=settings.vertex_budget)
    for step, transition in enumerate(walk):
        head = transition.target.heads[0]
        line = {
            "step": step,
            "rule": transition.rule,
            "tag": transition.tag.value,
            "head": head.symbol.value,
            "level": head.level,
            "position": head.position,
        }
        if transition.slots is not None:
            state = apply_two_qubit(state, gate_matrix(transition.tag), *transition.slots, n)
            line["slots"] = list(transition.slots)
        print(json.dumps(line))

    terminal = walk[-1].target if walk else canonical_start(tape)
    if is_terminal(terminal):
        order = register_ring_order(terminal)
        state = permute_register(state, n, [order.index(slot) for slot in range(n)])
    support = {format(i, f"0{n}b"): round(float(p), 12) for i, p in enumerate(np.abs(state) ** 2) if p > 1e-12}
    print(json.dumps({"terminal": is_terminal(terminal), "ring_support": support}))
    return EXIT_OK


def cmd_ulg_export(config: RunConfig, settings: WorkbenchSettings) -> int:
    tape = EdgeTape.from_program(config.dims, config.program) if config.program else EdgeTape.from_ground(config.dims)
    ulg = build_ulg(tape, budget=settings.vertex_budget)
    path = export_graph(ulg, config.output or "ulg.html")
    print(f"Exported {ulg.vertex_count} configurations to {path}")
    return EXIT_OK


def cmd_render_face(config: RunConfig, settings: WorkbenchSettings) -> int:
    ground = solve_static_ground(config.dims)
    _emit_text(render_face(ground, config.render or "top", config.render_format), config.output)
    return EXIT_OK


def cmd_synthesize(config: RunConfig, settings: WorkbenchSettings) -> int:
    target = word_unitary(parse_gate_word(config.target or "G"))
    max_len = config.max_len if config.max_len is not None else settings.synthesis_max_len
    result = synthesize(target, config.tol or settings.synthesis_epsilon, max_len)
    print(json.dumps({"word": list(result.word), "distance": result.distance}))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, WorkbenchSettings], int]] = {
    "tiles": cmd_tiles,
    "verify": cmd_verify,
    "universality": cmd_universality,
    "demo": cmd_demo,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "ulg-export": cmd_ulg_export,
    "render-face": cmd_render_face,
    "synthesize": cmd_synthesize,
}

NEEDS_DIMS = ("tiles", "spectrum", "evolve", "ulg-export", "render-face")


def _emit_text(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        print(text)


def _emit_report(report, path: Optional[str]) -> None:
    if path:
        write_report(report, path)
    else:
        print(report_json(report))


# Argument parsing


class UsageError(Exception):
    pass


class WorkbenchParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = WorkbenchParser(prog="cube-hamiltonian", description="Construction workbench for the cubic-lattice Hamiltonian")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dims", help="W,H,D")
        p.add_argument("--program", help="program bit string")
        p.add_argument("--tol", type=float)
        p.add_argument("--json", dest="json_path")
        p.add_argument("--out", dest="output")
        p.add_argument("--render", choices=FACES)
        p.add_argument("--format", dest="render_format", choices=("ascii", "svg"), default="svg")
        p.add_argument("--verbose", action="store_true")

    for name in COMMANDS:
        p = sub.add_parser(name)
        common(p)
        if name == "verify":
            p.add_argument("suite", choices=SUITE_NAMES + ("all",))
        if name == "demo":
            p.add_argument("--yes", dest="yes_program")
            p.add_argument("--no", dest="no_program")
        if name == "evolve":
            p.add_argument("--input", dest="input_bits")
        if name == "spectrum":
            p.add_argument("--k", type=int, default=4)
        if name == "synthesize":
            p.add_argument("--target", help="gate word, e.g. G,CW")
            p.add_argument("--max-len", dest="max_len", type=int)
    return parser


def parse_run_config(argv: List[str]) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    dims = args.pop("dims", None)
    if args["subcommand"] in NEEDS_DIMS and dims is None:
        raise UsageError(f"{args['subcommand']} needs --dims W,H,D")
    if dims is not None:
        try:
            args["dims"] = LatticeDims.parse(dims)
        except ValueError as e:
            raise UsageError(str(e)) from e
    return RunConfig(**{k: v for k, v in args.items() if v is not None})


def _apply_overrides(settings: WorkbenchSettings, config: RunConfig) -> WorkbenchSettings:
    if config.tol is None:
        return settings
    return settings.model_copy(
        update={"simplicity_tol": config.tol, "kernel_tol": config.tol, "spectrum_tol": config.tol}
    )


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_run_config(argv)
    except (UsageError, ValidationError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if config.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    settings = _apply_overrides(load_settings(), config)
    try:
        return COMMANDS[config.subcommand](config, settings)
    except INVALID_INSTANCE as e:
        logger.error("invalid instance: %s", e)
        return EXIT_INVALID_INSTANCE
    except ValueError as e:
        logger.error("usage error: %s", e)
        return EXIT_USAGE
    except WorkbenchError as e:
        logger.error("%s", e)
        return EXIT_VERIFY_FAILED


def run():
    """Run the workbench CLI"""
    sys.exit(main())


def tiles():
    sys.exit(main(["tiles"] + sys.argv[1:]))


def verify():
    sys.exit(main(["verify"] + sys.argv[1:]))


if __name__ == "__main__":
    run()
