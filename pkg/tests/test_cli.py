import json

import pytest
from click.testing import CliRunner

from discal.cli import main


@pytest.fixture()
def scenario_file(tmp_path):
    doc = {"problem": "stationary-1d", "n_space": 17, "regularization": 1e-4, "seed": 0}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_writes_artifacts(tmp_path, scenario_file):
    runner = CliRunner()
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "run", "--scenario", str(scenario_file), "--out", str(out),
            "--n-data", "2", "--ensemble-n", "8", "--mc-gamma", "30",
            "--mc-eig", "500",
        ],
    )
    assert result.exit_code == 0, result.output
    hyper = json.loads((out / "hyperparams.json").read_text())
    assert hyper["alpha_u"] > 0
    dataset = json.loads((out / "dataset.json").read_text())
    assert len(dataset["z"]) == 2 and len(dataset["d"]) == 2
    ensemble = json.loads((out / "ensemble.json").read_text())
    assert len(ensemble["samples"]) == 8
    assert len(ensemble["z_tilde"]) == 17
    assert len(ensemble["hifi_optimum"]) == 17


def test_init_hyper_consumes_dataset(tmp_path, scenario_file):
    runner = CliRunner()
    out = tmp_path / "out"
    runner.invoke(
        main,
        ["run", "--scenario", str(scenario_file), "--out", str(out),
         "--ensemble-n", "2", "--mc-gamma", "20", "--mc-eig", "200"],
    )
    hyper_path = tmp_path / "hyper.json"
    result = runner.invoke(
        main,
        [
            "init-hyper", "--dataset", str(out / "dataset.json"),
            "--scenario", str(scenario_file), "--out", str(hyper_path),
            "--mc-gamma", "20", "--mc-eig", "200", "--seed", "0",
        ],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(hyper_path.read_text())
    for key in ("alpha_u", "beta_u", "alpha_z", "beta_z", "alpha_d"):
        assert key in doc


def test_sample_snapshot(tmp_path, scenario_file):
    runner = CliRunner()
    out_path = tmp_path / "snapshot.json"
    result = runner.invoke(
        main,
        ["sample", "--scenario", str(scenario_file), "--q", "5", "--seed", "1",
         "--out", str(out_path)],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(out_path.read_text())
    assert doc["samples"]["q"] == 5
    assert len(doc["samples"]["metrics"]["max_abs_base"]) == 5


def test_sample_with_explicit_hyperparams(tmp_path, scenario_file):
    runner = CliRunner()
    hyper_path = tmp_path / "hyper.json"
    hyper_path.write_text(json.dumps({
        "alpha_u": 2.0, "beta_u": 0.02, "alpha_z": 0.4, "beta_z": 0.01,
        "alpha_d": 1e-6, "eps_t": 0.01,
    }))
    out_path = tmp_path / "snap.json"
    result = runner.invoke(
        main,
        ["sample", "--scenario", str(scenario_file), "--q", "3", "--seed", "0",
         "--out", str(out_path), "--hyperparams", str(hyper_path)],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(out_path.read_text())
    assert doc["hyperparams"]["alpha_u"] == 2.0
    assert len(doc["audit"]) == 1  # the explicit override is audited
