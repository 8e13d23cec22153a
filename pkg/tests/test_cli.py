import json
import subprocess
import sys

import pytest

from conftest import needs_bash, needs_dash
from shgen.cli import EXIT_ALERTS, EXIT_OK, EXIT_SETUP, main


def test_usage_error_exit_code(capsys):
    assert main(["campaign", "--time", "5", "--count", "3"]) == EXIT_SETUP
    assert main(["nonsense"]) == EXIT_SETUP


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "campaign" in capsys.readouterr().out


def test_missing_shell(tmp_path, capsys):
    assert main(["campaign", "--shell", "/nonexistent/sh", "--count", "1", "--out", str(tmp_path)]) == EXIT_SETUP
    assert "/nonexistent/sh" in capsys.readouterr().err


def test_invalid_generators(tmp_path, capsys):
    assert main(["campaign", "--generators", "v,x", "--count", "1", "--out", str(tmp_path)]) == EXIT_SETUP


def test_generate_to_stdout(capsys):
    assert main(["generate", "mi", "-n", "2", "--seed", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("# mi-") == 2


def test_generate_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["generate", "v", "-n", "3", "--size", "20", "--out", str(tmp_path / d)]) == EXIT_OK
    a = sorted(p.read_text() for p in (tmp_path / "a").iterdir())
    b = sorted(p.read_text() for p in (tmp_path / "b").iterdir())
    assert a == b and len(a) == 3


@needs_dash
def test_campaign_and_triage(tmp_path, capsys, monkeypatch, public_tmp):
    monkeypatch.setenv("SHGEN_SCRATCH", str(public_tmp / "cli-scratch"))
    out = tmp_path / "out"
    code = main([
        "campaign", "--shell", "dash", "--count", "10", "--seed", "7", "--out", str(out),
        "--size-v", "20", "--size-mi", "20", "--procs-v", "4", "--procs-i", "4", "--procs-mi", "4",
    ])
    report = json.loads((out / "report.json").read_text())
    assert code == (EXIT_ALERTS if report["overall"]["unique"] else EXIT_OK)
    assert report["overall"]["executed"] == 30
    capsys.readouterr()
    tcode = main(["triage", str(out / "alerts.jsonl"), "--json"])
    groups = json.loads(capsys.readouterr().out)
    assert len(groups) == report["overall"]["unique"]
    assert tcode == (EXIT_ALERTS if groups else EXIT_OK)


@needs_bash
def test_reduce_command(tmp_path, capsys, monkeypatch, public_tmp):
    monkeypatch.setenv("SHGEN_SCRATCH", str(public_tmp / "cli-scratch"))
    script = tmp_path / "s.sh"
    script.write_text("a=1;\necho $a;\nshift -- -0000000000000000000000000000000000;\nb=2;\nexit 0;\n")
    out = tmp_path / "r.sh"
    code = main(["reduce", "--script", str(script), "--shell", "bash", "--expect-kind", "i", "--out", str(out)])
    assert code == EXIT_OK
    # every statement is accepted by bash, so a single statement remains
    assert len(out.read_text().strip().splitlines()) == 1


@needs_dash
def test_reduce_not_failing(tmp_path, capsys, monkeypatch, public_tmp):
    monkeypatch.setenv("SHGEN_SCRATCH", str(public_tmp / "cli-scratch"))
    script = tmp_path / "ok.sh"
    script.write_text("exit 0;\n")
    assert main(["reduce", "--script", str(script), "--shell", "dash", "--expect-kind", "v"]) == EXIT_SETUP


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "shgen", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("shgen ")


@pytest.mark.parametrize("argv", [["generate", "q"], ["campaign", "--seed", "-1"], ["campaign", "--procs-v", "0"]])
def test_argument_validation(argv, capsys):
    assert main(argv) == EXIT_SETUP
