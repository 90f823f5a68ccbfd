import json

import numpy as np
import pytest

from ris_landauer import cli

RW = {"model": "qubit_rw", "lambda": 0.3, "tau": 0.5, "T_list": [4], "m": 10}


@pytest.fixture
def write(tmp_path):
    def _write(data, name="c.json"):
        p = tmp_path / name
        p.write_text(json.dumps(data))
        return str(p)
    return _write


def test_run(write, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", write(RW), "--out", str(out), "--T", "3"]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["T"] == 3 and printed["steps"] == 30
    assert (out / "run_T3_lam0.3.csv").exists()


def test_sweep(write, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["sweep", write({**RW, "T_list": [2, 3]}), "--out", str(out)]) == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 3


def test_spectrum(write, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["spectrum", write(RW), "--out", str(out), "--s", "0.5"]) == 0
    assert json.loads((out / "spectrum_s0.5.json").read_text())["z"] == 1


def test_verify_ok(write, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["verify", write(RW), "--out", str(out)]) == 0
    assert json.loads((out / "verify.json").read_text())["X_verdict"] == "detailed balance"


def test_verify_failure_exit_code(write, tmp_path):
    data = {**RW, "model": "custom", "rho_i": {"gibbs": 1.0}, "m": 1,
            "custom": {"h_S": [[0, 0], [0, 1]], "h_E": [[0, 0], [0, 0.8]], "v": np.zeros((4, 4)).tolist()}}
    assert cli.main(["verify", write(data), "--out", str(tmp_path / "o")]) == 2


def test_bad_config_exit_code(write, tmp_path, capsys):
    assert cli.main(["run", write({**RW, "colour": 1}), "--out", str(tmp_path / "o")]) == 1
    assert "colour" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 1


def test_seed_override(write, tmp_path, capsys):
    assert cli.main(["run", write(RW), "--seed", "7", "--out", str(tmp_path / "o")]) == 0


def test_env_output_dir(write, tmp_path, monkeypatch):
    monkeypatch.setenv("RIS_OUT_DIR", str(tmp_path / "env"))
    assert cli.main(["spectrum", write(RW)]) == 0
    assert (tmp_path / "env" / "spectrum_s0.json").exists()
