import csv
import json

import numpy as np
import pytest

from unlearnaudit import cli
from unlearnaudit.experiment import load_result

from test_experiment import config_dict


@pytest.fixture
def cfg_file(tmp_path, synthetic_csv):
    def write(**overrides):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config_dict(synthetic_csv, **overrides)))
        return str(path)
    return write


def test_run_json_and_report_csv(tmp_path, cfg_file, capsys):
    out = tmp_path / "res.json"
    assert cli.main(["run", "--config", cfg_file(), "--output", str(out),
                     "--workers", "1", "--seed", "8"]) == 0
    rec = load_result(out)
    assert rec.config["seed"] == 8
    assert cli.main(["report", "--input", str(out), "--output", str(tmp_path / "r.csv")]) == 0
    rows = list(csv.reader((tmp_path / "r.csv").read_text().splitlines()))
    assert len(rows) == 1 + len(rec.grid)
    capsys.readouterr()
    assert cli.main(["report", "--input", str(out), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == rec.to_dict()


def test_run_csv_to_stdout(cfg_file, capsys):
    assert cli.main(["run", "--config", cfg_file(), "--format", "csv", "--workers", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("target_kind,attack_kind") and len(lines) == 3


def test_run_into_output_dir(tmp_path, cfg_file):
    assert cli.main(["run", "--config", cfg_file(output_dir=str(tmp_path / "o")),
                     "--workers", "1", "--cache-dir", str(tmp_path / "cache")]) == 0
    assert (tmp_path / "o" / "tiny.json").is_file()
    assert any((tmp_path / "cache").iterdir())


def test_prepare(tmp_path, cfg_file):
    out = tmp_path / "prep.npz"
    assert cli.main(["prepare", "--config", cfg_file(), "--output", str(out)]) == 0
    with np.load(out) as z:
        assert {"features", "labels", "split_target_pos", "split_shadow_neg"} <= set(z.files)


def test_exit_code_config_error(cfg_file, tmp_path):
    assert cli.main(["run", "--config", cfg_file(unknown_key=1)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert cli.main(["run", "--config", cfg_file(), "--seed", "-1"]) == 1


def test_exit_code_data_error(cfg_file):
    ds = {"path": "/nonexistent/data.csv", "label_column": "label"}
    assert cli.main(["run", "--config", cfg_file(dataset=ds)]) == 2


def test_exit_code_runtime_error(cfg_file, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("worker died")
    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", "--config", cfg_file()]) == 3
