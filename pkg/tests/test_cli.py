import json
import os
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from betadrop.cli import main
from betadrop.data_io import write_embf
from betadrop.synthetic import two_clusters


@pytest.fixture()
def dataset_path(tmp_path):
    path = str(tmp_path / "demo.embf")
    write_embf(two_clusters(n=80, dim=4, separation=3.0, seed=0), path)
    return path


def _run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_train_writes_report_and_model(dataset_path, tmp_path):
    out = str(tmp_path / "out")
    res = _run(
        ["train", "--dataset", dataset_path, "--output-dir", out,
         "--epochs", "5", "--mc-passes", "5", "--seed", "1"]
    )
    assert res.exit_code == 0, res.output
    assert os.path.exists(os.path.join(out, "report.json"))
    assert os.path.exists(os.path.join(out, "model_fold0.embm"))
    assert "f1=" in res.output


def test_eval_on_saved_model(dataset_path, tmp_path):
    out = str(tmp_path / "out")
    _run(["train", "--dataset", dataset_path, "--output-dir", out, "--epochs", "5", "--mc-passes", "5"])
    res = _run(
        ["eval", "--model", os.path.join(out, "model_fold0.embm"),
         "--dataset", dataset_path, "--output-dir", out, "--mc-passes", "5"]
    )
    assert res.exit_code == 0, res.output
    payload = json.load(open(os.path.join(out, "eval_report.json")))
    assert "metrics" in payload and payload["dataset"] == "two-clusters"


def test_fewshot_protocol(dataset_path, tmp_path):
    out = str(tmp_path / "fs")
    res = _run(
        ["fewshot", "--dataset", dataset_path, "--output-dir", out,
         "--shots", "0,5", "--epochs", "5", "--mc-passes", "5"]
    )
    assert res.exit_code == 0, res.output
    summary = json.load(open(os.path.join(out, "fewshot_summary.json")))
    assert set(summary) == {"shot0", "shot5"}
    zero = json.load(open(os.path.join(out, "shot0", "report.json")))
    assert zero["folds"][0]["train_size"] == 0
    five = json.load(open(os.path.join(out, "shot5", "report.json")))
    assert five["folds"][0]["train_size"] == 10  # 2 classes x 5


def test_crossval_and_compare_and_svg(dataset_path, tmp_path):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    for out, extra in ((out_a, []), (out_b, ["--baseline-mode"])):
        res = _run(
            ["crossval", "--dataset", dataset_path, "--output-dir", out, "--folds", "3",
             "--epochs", "5", "--mc-passes", "5", "--seed", "3", *extra]
        )
        assert res.exit_code == 0, res.output
    res = _run(["compare", os.path.join(out_a, "report.json"), os.path.join(out_b, "report.json"),
                "--output", str(tmp_path / "delta.json")])
    assert res.exit_code == 0, res.output
    table = json.loads(res.output)
    assert table["mode_a"] == "proposed" and table["mode_b"] == "baseline"
    assert set(table["deltas"]) == {"f1_macro", "accuracy", "brier", "rmse"}

    res = _run(["report-svg", os.path.join(out_a, "report.json")])
    assert res.exit_code == 0, res.output
    assert os.path.exists(os.path.join(out_a, "per_class_brier.svg"))


def test_flag_lists_uncertain_instances(dataset_path, tmp_path):
    out = str(tmp_path / "out")
    _run(["train", "--dataset", dataset_path, "--output-dir", out, "--epochs", "5", "--mc-passes", "5"])
    res = _run(["flag", "--model", os.path.join(out, "model_fold0.embm"),
                "--dataset", dataset_path, "--threshold", "0.99", "--mc-passes", "5"])
    assert res.exit_code == 0, res.output
    ids = res.output.split()
    assert len(ids) > 0 and all(i.startswith("s") for i in ids)


def test_missing_dataset_is_data_error(tmp_path):
    res = CliRunner().invoke(main, ["train", "--dataset", str(tmp_path / "nope.embf")])
    assert res.exit_code == 3
    assert res.output.startswith("error: data:") or "error: data:" in res.output


def test_bad_config_is_config_error(dataset_path):
    res = CliRunner().invoke(main, ["train", "--dataset", dataset_path, "--mc-passes", "0"])
    assert res.exit_code == 2
    assert "error: config:" in res.output


def test_compare_mismatch_is_config_error(dataset_path, tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    _run(["train", "--dataset", dataset_path, "--output-dir", out_a, "--epochs", "2", "--mc-passes", "5", "--seed", "1"])
    _run(["train", "--dataset", dataset_path, "--output-dir", out_b, "--epochs", "2", "--mc-passes", "5", "--seed", "2"])
    res = CliRunner().invoke(main, ["compare", os.path.join(out_a, "report.json"), os.path.join(out_b, "report.json")])
    assert res.exit_code == 2
    assert "error: config:" in res.output


def test_config_file_with_flag_override(dataset_path, tmp_path):
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump({"train": {"epochs": 4, "seed": 7}, "mc_passes": 5}, fh)
    out = str(tmp_path / "out")
    res = _run(["train", "--config", cfg_path, "--dataset", dataset_path,
                "--output-dir", out, "--mc-passes", "6"])
    assert res.exit_code == 0, res.output
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["config"]["train"]["epochs"] == 4  # from file
    assert report["config"]["mc_passes"] == 6  # flag wins


def test_console_script_entry_point(dataset_path, tmp_path):
    out = str(tmp_path / "out")
    proc = subprocess.run(
        [sys.executable, "-m", "betadrop.cli", "train", "--dataset", dataset_path,
         "--output-dir", out, "--epochs", "2", "--mc-passes", "5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run(
        [sys.executable, "-m", "betadrop.cli", "train", "--dataset", str(tmp_path / "missing.embf")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert proc.stderr.strip().startswith("error: data:")
    assert len(proc.stderr.strip().splitlines()) == 1
