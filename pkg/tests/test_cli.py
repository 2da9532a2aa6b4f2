"""Tests for the command line interface."""

import json

import pytest

from bicomplex.cli import COMMANDS, build_parser, main
from tests.conftest import SPECS

PARTICLE = str(SPECS / "particle.spec")


def test_parser_knows_every_command():
    parser = build_parser()
    for command in COMMANDS:
        args = parser.parse_args([command, PARTICLE])
        assert args.command == command
        assert args.arity is None


def test_check_passes(capsys):
    assert main(["check", PARTICLE, "--samples", "3"]) == 0
    out = capsys.readouterr().out
    assert "status: pass" in out
    assert "[pass] Pi L_Q omega" in out


def test_broken_theory_fails_gate(capsys):
    assert main(["mc", str(SPECS / "broken.spec"), "--samples", "2"]) == 1
    captured = capsys.readouterr()
    assert "[fail] Pi L_Q omega" in captured.out
    assert "[skipped] mc: compatibility gate failed" in captured.out
    assert "Pi L_Q omega" in captured.err


def test_missing_file(tmp_path, capsys):
    assert main(["check", str(tmp_path / "missing.spec")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_malformed_spec(tmp_path, capsys):
    path = tmp_path / "bad.spec"
    path.write_text(
        "dimension: 1\ncoordinates: t\nfields: x:0\nomega: dV(x ^ dx(t)\n", encoding="utf-8"
    )
    assert main(["check", str(path)]) == 2
    err = capsys.readouterr().err
    assert "Syntax error in omega" in err
    assert "(line 4" in err


def test_arity_out_of_range(capsys):
    assert main(["linfty-verify", PARTICLE, "--arity", "5"]) == 2
    assert "--arity" in capsys.readouterr().err


def test_unknown_command():
    with pytest.raises(SystemExit) as exc_info:
        main(["prove", PARTICLE])
    assert exc_info.value.code == 2


def test_json_report_to_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    metrics = tmp_path / "metrics.prom"
    code = main(
        [
            "develop",
            PARTICLE,
            "--samples",
            "2",
            "--format",
            "json",
            "--out",
            str(out),
            "--metrics",
            str(metrics),
        ]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["command"] == "develop"
    assert report["spec"] == "particle"
    assert report["status"] == "pass"
    assert b"bicomplex_checks_total" in metrics.read_bytes()


def test_reports_are_deterministic(capsys):
    args = ["momentum", PARTICLE, "--samples", "2", "--seed", "5", "--format", "json"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["seed"] == 5
