"""
Command line: exit codes, error envelopes and the files each command writes.
"""
import json

import pytest

from iabplan.errors import EXIT_CONFIG, EXIT_OK, EXIT_REFUSED
from iabplan.harness.cli import main


@pytest.fixture
def write_config(tmp_path):
    def _write(raw, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw), encoding="utf-8")
        return str(path)

    return _write


def test_validate_ok(write_config, tiny_config, capsys):
    assert main(["validate", write_config(tiny_config)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["ok"] is True
    assert len(out["config_hash"]) == 16


def test_validate_reports_bad_field(write_config, tiny_config, capsys):
    raw = dict(tiny_config, deployment={"psi": 1.5})
    assert main(["validate", write_config(raw)]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "INVALID_CONFIG"
    assert "psi" in err["error"]["message"]


def test_missing_config_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    assert "not found" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["validate", str(path)]) == EXIT_CONFIG


def test_run_writes_result_directory(write_config, tiny_config, tmp_path, data_dir):
    out = tmp_path / "out" / "run1"
    assert main(["run", write_config(tiny_config), "--out", str(out)]) == EXIT_OK
    assert (out / "coverage.csv").exists()
    assert (out / "traces.csv").exists()
    assert (out / "events.jsonl").exists()
    metadata = json.loads((out / "metadata.json").read_text(encoding="utf-8"))
    assert metadata["run_id"] == "run1"
    assert metadata["scenario"] == "ga_non_iab"


def test_run_without_out_uses_storage(write_config, tiny_config, data_dir):
    raw = dict(tiny_config, scenario="macro_only", n_instances=1)
    assert main(["run", write_config(raw)]) == EXIT_OK
    assert len(list((data_dir / "runs").glob("*/coverage.csv"))) == 1


def test_seed_flag_overrides_config(write_config, tiny_config, tmp_path, data_dir):
    raw = dict(tiny_config, scenario="macro_only", n_instances=1)
    main(["run", write_config(raw), "--seed", "3", "--out", str(tmp_path / "a")])
    metadata = json.loads((tmp_path / "a" / "metadata.json").read_text(encoding="utf-8"))
    assert metadata["config"]["master_seed"] == 3


@pytest.mark.acceptance
def test_jobs_do_not_change_output_bytes(write_config, tiny_config, tmp_path, data_dir):
    config = write_config(tiny_config)
    assert main(["run", config, "--jobs", "1", "--out", str(tmp_path / "serial")]) == EXIT_OK
    assert main(["run", config, "--jobs", "2", "--out", str(tmp_path / "pooled")]) == EXIT_OK
    serial = (tmp_path / "serial" / "coverage.csv").read_bytes()
    pooled = (tmp_path / "pooled" / "coverage.csv").read_bytes()
    assert serial == pooled


def test_sweep_command(write_config, tiny_config, tmp_path, data_dir, capsys):
    raw = dict(tiny_config, scenario="macro_only", n_instances=1)
    out = tmp_path / "sweep"
    code = main(
        ["sweep", write_config(raw), "--param", "points.lambda_bl", "--values", "100", "300", "--out", str(out)]
    )
    assert code == EXIT_OK
    header, *rows = (out / "coverage.csv").read_text(encoding="utf-8").splitlines()
    assert "sweep_value" in header.split(",")
    assert len(rows) == 2 * 2


def test_exhaustive_refusal_exit_code(write_config, tmp_path, data_dir, capsys):
    raw = {
        "scenario": "exhaustive",
        "points": {"area_km2": 1.0, "lambda_s": 100.0, "lambda_u": 10.0, "lambda_bl": 0.0},
        "n_instances": 1,
        "n_fading_draws": 1,
    }
    assert main(["run", write_config(raw), "--out", str(tmp_path / "refused")]) == EXIT_REFUSED
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "SEARCH_REFUSED"
    events = (tmp_path / "refused" / "events.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(events[-1])["event_type"] == "RUN_REFUSED"


@pytest.mark.integration
def test_figure_command(tmp_path):
    out = tmp_path / "figures"
    code = main(
        ["figure", "fig8", "--instances", "1", "--fading-draws", "2", "--iterations", "2", "--out", str(out)]
    )
    assert code == EXIT_OK
    header = (out / "fig8.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "iteration,queen_rho,scenario"
    metadata = json.loads((out / "fig8.json").read_text(encoding="utf-8"))
    assert metadata["figure"] == "fig8"
    assert len(metadata["runs"]) == 5
