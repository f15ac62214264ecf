import asyncio
import json

import pytest

from cube_hamiltonian.constants import EXIT_INVALID_INSTANCE, EXIT_OK, EXIT_USAGE
from cube_hamiltonian.main import UsageError, main, parse_run_config, run_suites, suite_tiles
from cube_hamiltonian.statics import static_energy
from cube_hamiltonian.utils.configUtils import load_settings
from cube_hamiltonian.utils.reportUtils import load_configuration, read_report


@pytest.fixture
def settings():
    return load_settings()


def test_tiles_writes_a_zero_energy_report(tmp_path, capsys):
    out = tmp_path / "ground.json"
    assert main(["tiles", "--dims", "2,2,2", "--json", str(out)]) == EXIT_OK
    report = read_report(out)
    assert report["energy"] == "0"
    assert set(report["edge_program"]) <= {"0", "1"}
    assert static_energy(load_configuration(out)) == 0
    assert "1. Solving static ground" in capsys.readouterr().out


def test_tiles_renders_a_face(tmp_path):
    svg = tmp_path / "top.svg"
    assert main(["tiles", "--dims", "2,2,3", "--render", "top", "--out", str(svg)]) == EXIT_OK
    assert svg.read_text().startswith("<svg")


@pytest.mark.parametrize(
    "argv,code",
    [
        (["tiles", "--dims", "1,1,1"], EXIT_INVALID_INSTANCE),
        (["tiles"], EXIT_USAGE),
        (["tiles", "--dims", "2,2"], EXIT_USAGE),
        (["tiles", "--dims", "0,2,2"], EXIT_USAGE),
        (["tiles", "--dims", "2,2,2", "--tol", "1"], EXIT_USAGE),
        (["spectrum", "--dims", "1,4,1", "--program", "01x"], EXIT_USAGE),
        (["verify", "nothing"], EXIT_USAGE),
        (["frobnicate"], EXIT_USAGE),
        (["render-face", "--dims", "2,2,2", "--render", "front"], EXIT_USAGE),
        (["evolve", "--dims", "1,3,1", "--program", "0", "--input", "01"], EXIT_USAGE),
    ],
)
def test_exit_codes(argv, code):
    assert main(argv) == code


def test_parse_run_config():
    config = parse_run_config(["spectrum", "--dims", "1,4,1", "--program", "0001", "--k", "2", "--tol", "1e-8"])
    assert config.dims.label() == "1,4,1"
    assert config.program == "0001"
    assert config.k == 2
    assert config.tol == 1e-8
    with pytest.raises(UsageError):
        parse_run_config(["spectrum"])


def test_spectrum_prints_json(capsys):
    assert main(["spectrum", "--dims", "1,4,1", "--program", "0001", "--k", "2"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["q"] == 3
    assert len(report["low_spectrum"]) == 2
    assert "|V|" in report


def test_evolve_streams_the_walk(capsys):
    assert main(["evolve", "--dims", "1,4,1", "--program", "0001", "--input", "010"]) == EXIT_OK
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    steps, summary = lines[:-1], lines[-1]
    assert all(set(s) >= {"step", "rule", "tag", "head", "level", "position"} for s in steps)
    assert summary["terminal"]
    assert sum(summary["ring_support"].values()) == pytest.approx(1.0)


def test_synthesize_prints_the_word(capsys):
    assert main(["synthesize", "--target", "G,G", "--max-len", "2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["word"] == ["G", "G"]


def test_synthesize_failure_is_a_verification_failure():
    assert main(["synthesize", "--target", "G,G", "--max-len", "1"]) == 1


def test_render_face_ascii(capsys):
    assert main(["render-face", "--dims", "2,2,2", "--render", "edge", "--format", "ascii"]) == EXIT_OK
    column = capsys.readouterr().out.split()
    assert len(column) == 3


def test_ulg_export(tmp_path):
    path = tmp_path / "graph.graphml"
    assert main(["ulg-export", "--dims", "1,3,1", "--program", "0", "--out", str(path)]) == EXIT_OK
    assert "<graphml" in path.read_text()


def test_universality_command(tmp_path):
    out = tmp_path / "rank.json"
    assert main(["universality", "--json", str(out)]) == EXIT_OK
    report = read_report(out)
    assert report["rank"] == 63
    assert report["pass"] is True


@pytest.mark.slow
def test_tiles_suite(settings):
    report = suite_tiles(settings)
    assert report.passed, report.checks


def test_suites_run_concurrently(settings):
    reports = asyncio.run(run_suites(["universality", "dynamics"], settings))
    assert [r.suite for r in reports] == ["universality", "dynamics"]
    assert all(r.passed for r in reports)


@pytest.mark.slow
def test_verify_all(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "all", "--json", str(out)]) == EXIT_OK
    report = read_report(out)
    assert report["passed"]
    assert report["checks"]["universality.rank"]


@pytest.mark.slow
def test_demo(capsys):
    assert main(["demo"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "lambda_yes" in out
