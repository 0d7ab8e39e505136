import json

import numpy as np
import pytest

from vme.cli import main
from vme.pauli import dense_to_json

BASE_CONFIG = {
    "model": "one_qubit",
    "part": "real",
    "multiplier_method": "exact",
    "iterations": 20,
    "n_runs": 60,
    "init": {"kind": "uniform", "lo": 0.0, "hi": 6.283185307179586},
    "estimator": {"mode": "exact"},
    "seed": 123,
    "classify": {"tolerance": 0.5, "targets": "default"},
    "outputs": {"heatmap": {"bin_width": 0.2}},
}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_groups(summary_path):
    lines = summary_path.read_text().strip().splitlines()
    assert lines[0] == "iteration,group,median,p04,p96,count"
    return {float(line.split(",")[1]) for line in lines[1:]}


class TestRun:
    def test_full_run_outputs(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("runs.json", "summary.csv", "errors.csv", "heatmap.csv", "manifest.json"):
            assert (out / name).exists()
        assert read_groups(out / "summary.csv") == {5.0, 3.0, 2.0}
        runs = json.loads((out / "runs.json").read_text())
        assert runs["schema"] == "vme.runs/1"
        assert len(runs["records"]) == 60
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 123
        assert manifest["config"]["n_runs"] == 60

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG | {"n_runs": 8})
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
        for name in ("runs.json", "summary.csv", "errors.csv", "heatmap.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_malformed_json_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_key_exit_2(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG | {"walkers": 9})
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG | {"n_runs": 4})
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "777"]) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 777


class TestDecompose:
    def test_one_qubit_target(self, tmp_path, capsys):
        wd1 = np.array([[5.0, 2 - 2j], [2 + 2j, 3.0]])
        path = tmp_path / "wd1.json"
        path.write_text(json.dumps(dense_to_json(wd1)))
        assert main(["decompose", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        coeffs = {t["axes"]: t["coeff_re"] for t in doc["pauli"]}
        assert coeffs == {"I": 4.0, "X": 2.0, "Y": 2.0, "Z": 1.0}
        assert np.allclose(np.array(doc["w_real"]["re"]), [[5.0, 2.0], [2.0, 3.0]])
        assert np.allclose(np.array(doc["w_imag"]["im"]), [[0.0, -2.0], [2.0, 0.0]])

    def test_identity(self, tmp_path, capsys):
        path = tmp_path / "eye.json"
        path.write_text(json.dumps(dense_to_json(np.eye(2))))
        assert main(["decompose", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["pauli"] == [{"coeff_re": 1.0, "coeff_im": 0.0, "axes": "I"}]

    def test_non_hermitian_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(dense_to_json(np.array([[0.0, 1.0], [0.0, 0.0]]))))
        assert main(["decompose", str(path)]) == 2
        assert "error" in capsys.readouterr().err


class TestReport:
    @pytest.fixture()
    def runs_dir(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG | {"n_runs": 20})
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        return out

    def test_reanalysis_with_tighter_tolerance(self, runs_dir, tmp_path):
        out2 = tmp_path / "re"
        assert main(
            ["report", "--runs", str(runs_dir / "runs.json"), "--out", str(out2), "--tolerance", "1e-9"]
        ) == 0
        # classical runs converge below 1e-9 only when fully settled
        first = read_groups(runs_dir / "summary.csv")
        second = read_groups(out2 / "summary.csv")
        assert second <= first

    def test_tolerance_zero_unassigns_everything(self, runs_dir, tmp_path):
        out2 = tmp_path / "re0"
        assert main(
            ["report", "--runs", str(runs_dir / "runs.json"), "--out", str(out2), "--tolerance", "0"]
        ) == 0
        assert read_groups(out2 / "summary.csv") == set()

    def test_empty_records_ok(self, runs_dir, tmp_path):
        doc = json.loads((runs_dir / "runs.json").read_text())
        doc["records"] = []
        path = tmp_path / "empty.json"
        path.write_text(json.dumps(doc))
        out2 = tmp_path / "re-empty"
        assert main(["report", "--runs", str(path), "--out", str(out2)]) == 0
        assert read_groups(out2 / "summary.csv") == set()

    def test_schema_mismatch_exit_2(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text(json.dumps({"schema": "other/9", "records": []}))
        assert main(["report", "--runs", str(path), "--out", str(tmp_path / "x")]) == 2
