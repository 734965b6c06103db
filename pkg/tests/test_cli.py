import json
import subprocess
import sys

import pytest

from ocbamr.cli import build_parser, main


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "pcs.csv"
    code = main(["run", "--experiment", "exp1", "--policies", "ea,ocba-mr", "--budgets", "300,400",
                 "--reps", "3", "--seed", "5", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("experiment,policy,budget,reps,pcs,stderr,seed")
    assert len(lines) == 5 and lines[1].startswith("exp1,ea,300,3,")


def test_run_to_stdout_uses_default_policies(capsys):
    assert main(["run", "--experiment", "exp2", "--budgets", "400", "--reps", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert [r.split(",")[1] for r in rows[1:]] == ["ea", "ocba-mr-ep", "ocba-mrp"]


def test_run_from_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "exp1", "m": 3}))
    assert main(["run", "--experiment", str(cfg), "--policies", "ocba-mrp", "--budgets", "300",
                 "--reps", "2", "--variance-mode", "known"]) == 0
    assert ",known," in capsys.readouterr().out


def test_run_rejects_bad_input(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--experiment", "exp1", "--budgets", "a,b"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--experiment", "exp1", "--budgets", "1", "--policies", "x"])
    with pytest.raises(SystemExit):
        main(["run", "--experiment", "missing.json", "--budgets", "100"])
    assert main(["run", "--experiment", "exp1", "--budgets", "50", "--reps", "1"]) == 2


def test_verify_subset(capsys):
    assert main(["verify", "--only", "weights,partition"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(line.startswith("PASS") for line in out)
    assert main(["verify", "--only", "nope"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ocbamr", "verify", "--only", "support"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "PASS support_location" in res.stdout
