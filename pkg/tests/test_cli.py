import csv
import io
import json
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from milnorcells.analysis import MinimalityReport
from milnorcells.cli import EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main

ARR = Path(__file__).resolve().parent.parent / "arrangements"


def run_main(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_predict_example(capsys):
    code, out, _ = run_main(capsys, "predict", ARR / "example.arr")
    assert code == EXIT_OK
    assert "c_F      = (3, 6, 3)" in out
    assert "P(M)     = 1 + 3t + 3t^2 + t^3" in out


def test_predict_json(capsys):
    code, out, _ = run_main(capsys, "predict", ARR / "generic4.arr", "--json")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["cell_counts"]["c_F"] == [4, 12, 12]
    assert d["poincare"]["p_Mstar"] == [1, 3, 3]


def test_lattice_lists_every_flat(capsys):
    code, out, _ = run_main(capsys, "lattice", ARR / "example.arr", "--json")
    assert code == EXIT_OK
    d = json.loads(out)
    assert len(d["flats"]) == 1 + 3 + 3 + 1
    assert d["chi"] == [-1, 3, -3, 1]


def test_verify_example_round_trips(capsys):
    code, out, _ = run_main(capsys, "verify", ARR / "example.arr", "--seed", 7, "--json")
    assert code == EXIT_OK
    rep = MinimalityReport.from_dict(json.loads(out))
    assert rep.passed and rep.found() == (3, 6, 3)


def test_critical_single_stage(capsys):
    code, out, _ = run_main(capsys, "critical", ARR / "example.arr", "--stage", 2)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[1] == "solutions:"
    assert len(lines) == 2 + 6
    assert all(line.endswith("index 1") for line in lines[2:])


def test_family_csv_to_stdout(capsys):
    code, out, _ = run_main(capsys, "family", ARR / "qt.arr", "--values", "1,1/10,0", "--csv", "-")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["t"] for r in rows] == ["1", "1/10", "0"]
    assert [int(r["found"]) for r in rows] == [3, 3, 0]
    assert [r["pass"] for r in rows] == ["true"] * 3
    assert float(rows[1]["max_norm"]) > float(rows[0]["max_norm"])


def test_family_csv_file_alongside_human_output(capsys, tmp_path):
    path = tmp_path / "scan.csv"
    code, out, _ = run_main(capsys, "family", ARR / "qt.arr", "--values", "1/2", "--csv", path)
    assert code == EXIT_OK and "1/2" in out
    assert path.read_text().splitlines()[0] == "t,stage,predicted,found,diverged,max_norm,pass"


def test_tolerance_overrides():
    cfg = RunConfig("verify", "x.arr", tol=(("newton_tol", "1e-9"), ("max_retries", "1")))
    opts = cfg.tracker_options()
    assert opts.newton_tol == 1e-9 and opts.max_retries == 1
    with pytest.raises(UsageError):
        RunConfig("verify", "x.arr", tol=(("bogus", "1"),)).tracker_options()
    with pytest.raises(UsageError):
        RunConfig("verify", "x.arr", tol=(("newton_tol", "abc"),)).tracker_options()


@pytest.mark.parametrize("argv", [
    ["critical", ARR / "example.arr", "--stage", "5"],
    ["family", ARR / "qt.arr", "--values", "0.1"],
    ["family", ARR / "example.arr", "--values", "1"],
    ["verify", ARR / "qt.arr"],
    ["predict", ARR / "example.arr", "--values", "1"],
    ["predict", ARR / "missing.arr"],
    ["verify", ARR / "example.arr", "--tol", "speed=3"],
    ["explode", ARR / "example.arr"],
    ["family", ARR / "qt.arr", "--values", "1", "--json", "--csv", "-"],
])
def test_usage_errors_exit_two(capsys, argv):
    code, out, err = run_main(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_syntax_error_names_the_line(capsys, tmp_path):
    bad = tmp_path / "bad.arr"
    bad.write_text("vars: x y\nform: x + 1\n")
    code, _, err = run_main(capsys, "predict", bad)
    assert code == EXIT_USAGE
    assert "line 2" in err


def test_mismatch_exit_status(capsys, monkeypatch):
    import milnorcells.cli as cli

    real = cli.analyze

    def broken(arr, opts):
        return replace(real(arr, opts), euler_ok=False)

    monkeypatch.setattr(cli, "analyze", broken)
    code, out, _ = run_main(capsys, "verify", ARR / "example.arr")
    assert code == EXIT_MISMATCH and out.rstrip().endswith("FAIL")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "milnorcells", "predict", str(ARR / "braid.arr")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "c_F      = (6, 30, 36)" in proc.stdout
