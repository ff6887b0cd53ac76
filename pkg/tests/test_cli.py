import json
import subprocess
import sys

import pytest

from msddp.cli import main
from msddp.model import Instance, Realization, StageShape, save_instance
from msddp.records import read_csv


@pytest.fixture
def inst_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["gen", "--family", "inventory", "--T", "3", "--counts", "1,2,2",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


@pytest.fixture
def det_file(tmp_path):
    path = tmp_path / "det.json"
    assert main(["gen", "--family", "inventory", "--T", "3", "--counts", "1,1,1",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


def test_gen_is_reproducible(tmp_path, inst_file):
    other = tmp_path / "again.json"
    main(["gen", "--family", "inventory", "--T", "3", "--counts", "1,2,2", "--seed", "7",
          "--out", str(other)])
    assert inst_file.read_bytes() == other.read_bytes()
    assert json.loads(inst_file.read_text())["lambda"] == 1.0


@pytest.mark.parametrize("cmd,extra", [("ddp", []), ("eddp", []),
                                       ("sddp", ["--stop", "distance", "--replicas", "2"])])
def test_solvers_write_csv(tmp_path, inst_file, det_file, cmd, extra):
    out = tmp_path / "out.csv"
    inst = det_file if cmd == "ddp" else inst_file
    code = main([cmd, "--instance", str(inst), "--delta", "0.25", "--out", str(out)] + extra)
    assert code == 0
    cols, rows = read_csv(out.read_text())
    assert cols[0] == "k" and rows


def test_json_output(tmp_path, inst_file, capsys):
    assert main(["eddp", "--instance", str(inst_file), "--delta", "0.25",
                 "--format", "json", "--lipschitz", "2"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["status"] == "converged" and body["iterations"] == len(body["records"])
    assert "wall_time" not in body["records"][0]


def test_budget_exit_code(inst_file, capsys):
    assert main(["sddp", "--instance", str(inst_file), "--delta", "0.01", "--stop", "budget",
                 "--max-iter", "2"]) == 2


def test_bad_input_exit_codes(tmp_path, inst_file, capsys):
    assert main(["ddp", "--instance", str(tmp_path / "missing.json"), "--delta", "0.1"]) == 4
    assert main(["ddp", "--instance", str(inst_file), "--delta", "0.1"]) == 4  # N_t > 1
    assert main(["eddp", "--instance", str(inst_file)]) == 4  # no delta
    assert main(["gen", "--family", "random-lp", "--params", '{"width_range": [0, 0]}']) == 4
    with pytest.raises(SystemExit) as info:
        main(["sddp", "--stop", "sometimes"])
    assert info.value.code == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["oracle", "extensive", "--instance", str(bad)]) == 4


def test_infeasible_exit_code(tmp_path, capsys):
    # stage 2 must equal chi + 5 while its box is [0, 1]
    s = [StageShape(1, 0, 0, [0.0], [1.0]), StageShape(1, 1, 0, [0.0], [1.0])]
    r = [[Realization.create([1.0])],
         [Realization.create([1.0], n_prev=1, A=[[1.0]], B=[[1.0]], b=[5.0])]]
    path = tmp_path / "infeasible.json"
    save_instance(Instance(2, 1.0, s, r), path)
    assert main(["ddp", "--instance", str(path), "--delta", "0.1", "--lipschitz", "1"]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_oracle_modes(inst_file, capsys):
    assert main(["oracle", "--instance", str(inst_file), "extensive"]) == 0
    ext = json.loads(capsys.readouterr().out)
    assert main(["oracle", "extensive", "--instance", str(inst_file)]) == 0
    assert json.loads(capsys.readouterr().out) == ext
    assert main(["oracle", "grid", "--instance", str(inst_file), "--stage", "3",
                 "--res", "4"]) == 0
    grid = json.loads(capsys.readouterr().out)
    assert len(grid["nodes"]) == 5 and grid["error_bound"] == 0.0
    assert isinstance(ext["F_star"], float)


def test_kelley_command(capsys):
    assert main(["kelley", "--function", "abs", "--eps", "1e-6", "--x1", "0.5"]) == 0
    cols, rows = read_csv(capsys.readouterr().out)
    assert rows[-1][cols.index("ub")] == 0.0
    assert main(["kelley", "--function", "abs", "--x1", "0.5,0.1"]) == 4


def test_module_entry_point_and_log_level(inst_file):
    env_run = subprocess.run(
        [sys.executable, "-m", "msddp", "eddp", "--instance", str(inst_file), "--delta", "0.25"],
        capture_output=True, text=True, env={"MSDDP_LOG": "info", "PATH": ""})
    assert env_run.returncode == 0
    assert env_run.stdout.startswith("#schema=msddp-iter/1")
    assert "INFO" in env_run.stderr
