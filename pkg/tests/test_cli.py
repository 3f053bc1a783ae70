"""The frankc command line: exit codes, diagnostics and output."""

import re
import subprocess
import sys

import pytest

from frankc.cli import decode_input, main


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_run_prints_value(capsys, corpus):
    status, out, err = run(capsys, "run", str(corpus / "map.fk"), "--input", "")
    assert status == 0 and out == "= cons 2 (cons 3 (cons 4 nil))\n" and err == ""


def test_run_pure_top_ability(capsys, corpus):
    status, out, _ = run(capsys, "run", str(corpus / "pipe_dobe.fk"), "--top-ability", "pure", "--input", "")
    assert status == 0 and out == '= "dobe"\n'


def test_run_console_echoes_output_then_value(capsys, corpus):
    status, out, _ = run(capsys, "run", str(corpus / "zeros.fk"), "--input", r"00\b1 ")
    assert status == 0
    assert out == "00\b \b \n= 1\n"


def test_static_error_diagnostic(capsys, corpus):
    path = str(corpus / "bad.fk")
    status, out, err = run(capsys, "check", path)
    assert status == 1 and out == ""
    assert re.match(re.escape(path) + r":\d+:\d+: error: AbilityMismatch: ", err)


def test_command_outside_adjustment(capsys, corpus):
    status, _, err = run(capsys, "run", str(corpus / "pipe_aborting.fk"), "--input", "")
    assert status == 1 and "CommandNotInAdjustment" in err


def test_pure_top_rejects_console_program(capsys, corpus):
    status, _, err = run(capsys, "check", str(corpus / "zeros.fk"), "--top-ability", "pure")
    assert status == 1 and "AbilityMismatch" in err


def test_fuel_exhaustion_is_runtime_error(capsys, corpus):
    status, _, err = run(capsys, "run", str(corpus / "map.fk"), "--fuel", "10", "--input", "")
    assert status == 2 and "FuelExhausted" in err


def test_exhausted_script_is_runtime_error(capsys, corpus):
    status, _, err = run(capsys, "run", str(corpus / "zeros.fk"), "--input", "00")
    assert status == 2 and "EmptyScriptedInput" in err


def test_usage_errors(capsys, corpus, tmp_path):
    assert run(capsys, "frobnicate", "x.fk")[0] == 3
    assert run(capsys, "run")[0] == 3
    assert run(capsys, "run", str(corpus / "map.fk"), "--fuel", "0")[0] == 3
    assert run(capsys, "check", str(tmp_path / "missing.fk"))[0] == 3
    status, _, err = run(capsys, "run", str(corpus / "sends.fk"), "--input", "")
    assert status == 3 and "main" in err


def test_check_and_elaborate(capsys, corpus):
    status, out, _ = run(capsys, "check", str(corpus / "index.fk"))
    assert status == 0 and out == ""
    status, out, _ = run(capsys, "elaborate", str(corpus / "unit.fk"))
    assert status == 0 and out.startswith("letrec") and "handle" in out


def test_multiple_paths_take_worst_status(capsys, corpus):
    status, out, err = run(capsys, "run", str(corpus / "unit.fk"), str(corpus / "bad.fk"), "--input", "")
    assert status == 1
    assert "= unit" in out and "AbilityMismatch" in err


def test_no_prelude(capsys, tmp_path):
    f = tmp_path / "bare.fk"
    f.write_text("data B = t | f\nmain : B\nmain! = t\n")
    assert run(capsys, "run", str(f), "--no-prelude", "--input", "")[1] == "= t\n"
    f.write_text("main : Bool\nmain! = tt\n")
    assert run(capsys, "check", str(f), "--no-prelude")[0] == 1


def test_trace_goes_to_stderr(capsys, corpus):
    status, out, err = run(capsys, "run", str(corpus / "unit.fk"), "--trace", "--input", "")
    assert status == 0 and out == "= unit\n"
    assert err.count("--> [") == 4


def test_redundancy_warning(capsys, tmp_path):
    f = tmp_path / "dup.fk"
    f.write_text("g : Bool -> Int\ng tt = 1\ng tt = 2\ng ff = 3\nmain : Int\nmain! = g ff\n")
    status, out, err = run(capsys, "run", str(f), "--input", "")
    assert status == 0 and out == "= 3\n" and "warning" in err


@pytest.mark.parametrize("text, decoded", [
    (r"00\b1 ", "00\b1 "), (r"a\nb", "a\nb"), (r"\\b", "\\b"), (r"\q", "\\q"), ("plain", "plain"),
])
def test_decode_input(text, decoded):
    assert decode_input(text) == decoded


def test_module_entry_point(corpus):
    p = subprocess.run([sys.executable, "-m", "frankc", "run", str(corpus / "unit.fk"), "--input", ""],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout == "= unit\n"
