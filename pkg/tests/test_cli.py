"""Tests for the command-line interface."""

import io
import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.main import main

FAST = ["--cycles", "2000", "--reps", "2"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def demand_csv(tmp_path, hand_sequence):
    path = tmp_path / "demand.csv"
    path.write_text("xi\n" + "\n".join(str(v) for v in hand_sequence) + "\n")
    return path


class TestSimulate:
    def test_json_report(self, runner):
        result = runner.invoke(main, ["simulate", "--N", "2", "--R", "2", "--m", "10", "--sigma2", "1",
                                      "--schedule", "correlated", "--seed", "42", "--format", "json", *FAST])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["lpw_prediction"] == 402
        assert report["empirical_variance"] == pytest.approx(4.0, rel=0.1)
        assert report["master_seed"] == 42

    def test_text_summary(self, runner):
        result = runner.invoke(main, ["simulate", *FAST])
        assert result.exit_code == 0, result.output
        assert "empirical Var(Z_i)" in result.output
        assert "classical (LPW)" in result.output

    def test_csv_has_one_row_per_replication(self, runner):
        result = runner.invoke(main, ["simulate", "--format", "csv", *FAST])
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert len(lines) == 3
        assert "cycle_variance" in lines[0]

    def test_odd_review_period(self, runner):
        result = runner.invoke(main, ["simulate", "--R", "3", "--cycles", "100", "--reps", "1"])
        assert result.exit_code == 0, result.output

    def test_negative_variance_is_semantic_error(self, runner):
        result = runner.invoke(main, ["simulate", "--sigma2", "-1"])
        assert result.exit_code == 1
        assert "sigma2" in result.output

    def test_unknown_flag_is_usage_error(self, runner):
        result = runner.invoke(main, ["simulate", "--retailers", "3"])
        assert result.exit_code == 2

    def test_bad_choice_is_usage_error(self, runner):
        result = runner.invoke(main, ["simulate", "--schedule", "sometimes"])
        assert result.exit_code == 2

    def test_output_dir_artifacts(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, ["simulate", "--output-dir", str(out), *FAST])
        assert result.exit_code == 0, result.output
        assert json.loads((out / "report.json").read_text())["K"] == 2
        assert len(pd.read_csv(out / "replications.csv")) == 2
        assert (out / "report.txt").exists()

    def test_config_file_and_flag_precedence(self, runner, tmp_path):
        config = tmp_path / "experiment.toml"
        config.write_text("R = 3\ncycles = 300\nreplications = 1\n")
        result = runner.invoke(main, ["simulate", "--config", str(config), "--R", "4", "--format", "json"])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["config"]["R"] == 4
        assert report["config"]["cycles"] == 300

    def test_unknown_config_key(self, runner, tmp_path):
        config = tmp_path / "experiment.toml"
        config.write_text("retailers = 3\n")
        result = runner.invoke(main, ["simulate", "--config", str(config)])
        assert result.exit_code == 1
        assert "retailers" in result.output

    def test_reproducible(self, runner):
        args = ["simulate", "--schedule", "random", "--format", "json", *FAST]
        assert runner.invoke(main, args).output == runner.invoke(main, args).output

    def test_format_does_not_change_numbers(self, runner):
        as_json = json.loads(runner.invoke(main, ["simulate", "--format", "json", *FAST]).output)
        result = runner.invoke(main, ["simulate", "--format", "csv", *FAST])
        frame = pd.read_csv(io.StringIO(result.output), float_precision="round_trip")
        assert frame["cycle_variance"].tolist() == [r["cycle_variance"] for r in as_json["replications"]]


class TestDecompose:
    def test_hand_oracle(self, runner, demand_csv):
        result = runner.invoke(main, ["decompose", str(demand_csv), "--R", "2", "--format", "json"])
        assert result.exit_code == 0, result.output
        data = json.loads(result.output)
        assert data["decomposition"]["sigma2_within"] == 1.0
        assert data["decomposition"]["sigma2_between"] == 0.25
        assert data["decomposition"]["sigma2_total"] == 1.25
        assert data["scenario"]["label"] == "B"
        assert data["T"] == 4

    def test_text_output(self, runner, demand_csv):
        result = runner.invoke(main, ["decompose", str(demand_csv), "--R", "2"])
        assert result.exit_code == 0, result.output
        assert "Scenario B" in result.output

    def test_json_out(self, runner, demand_csv, tmp_path):
        target = tmp_path / "out" / "decomposition.json"
        result = runner.invoke(main, ["decompose", str(demand_csv), "--R", "2", "--json-out", str(target)])
        assert result.exit_code == 0, result.output
        assert json.loads(target.read_text())["scenario"]["label"] == "B"

    def test_constant_file(self, runner, tmp_path):
        path = tmp_path / "flat.csv"
        path.write_text("xi\n3\n3\n3\n3\n")
        result = runner.invoke(main, ["decompose", str(path), "--R", "2", "--format", "json"])
        assert result.exit_code == 0, result.output
        data = json.loads(result.output)
        assert data["decomposition"]["sigma2_total"] == 0.0
        assert data["scenario"]["label"] == "A"

    def test_indivisible_length(self, runner, demand_csv):
        result = runner.invoke(main, ["decompose", str(demand_csv), "--R", "3"])
        assert result.exit_code == 1
        assert "T=4" in result.output
        assert "R=3" in result.output

    def test_missing_file_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["decompose", str(tmp_path / "missing.csv"), "--R", "2"])
        assert result.exit_code == 2


class TestCompare:
    def test_preset_table(self, runner):
        result = runner.invoke(main, ["compare", "--preset", "lpw-section1", "--format", "csv", *FAST])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(io.StringIO(result.output), float_precision="round_trip")
        assert frame["model"].tolist() == ["empirical", "corrected", "lpw"]
        assert frame.loc[2, "variance"] == 402
        assert frame.loc[2, "bullwhip_ratio"] == 201

    def test_headline_preset_text(self, runner):
        result = runner.invoke(main, ["compare", "--preset", "lpw-section1", "--cycles", "100", "--reps", "2"])
        assert result.exit_code == 0, result.output
        assert "402" in result.output

    def test_sweep_table(self, runner):
        result = runner.invoke(main, ["compare", "--N", "1", "--sweep", "R", "1,2,4,8", "--format", "csv", *FAST])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(io.StringIO(result.output), float_precision="round_trip")
        assert frame["R"].tolist() == [1, 2, 4, 8]
        assert frame["empirical_ratio"].tolist() == pytest.approx([1, 2, 4, 8], rel=0.15)

    def test_invalid_sweep_value(self, runner):
        result = runner.invoke(main, ["compare", "--sweep", "R", "0"])
        assert result.exit_code == 1
        assert "R=0" in result.output

    def test_sweep_needs_values(self, runner):
        result = runner.invoke(main, ["compare", "--sweep", "R", ","])
        assert result.exit_code == 2

    def test_text_table(self, runner):
        result = runner.invoke(main, ["compare", *FAST])
        assert result.exit_code == 0, result.output
        assert "Model comparison" in result.output


class TestDiagnose:
    def test_random_counts(self, runner):
        result = runner.invoke(main, ["diagnose", "--schedule", "random", "--N", "2", "--R", "2",
                                      "--cycles", "100000", "--format", "json"])
        assert result.exit_code == 0, result.output
        counts = json.loads(result.output)["counts"]
        assert counts["total_pmf"][2] == 1.0
        assert counts["phase_pmf"][0] == pytest.approx([0.25, 0.5, 0.25], abs=0.01)

    def test_binomial_total_variance(self, runner):
        result = runner.invoke(main, ["diagnose", "--schedule", "lpw_binomial", "--N", "2", "--R", "2",
                                      "--cycles", "100000", "--format", "json"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["counts"]["total_variance"] == pytest.approx(1.0, abs=0.02)

    def test_no_batching_not_flagged(self, runner):
        result = runner.invoke(main, ["diagnose", "--schedule", "correlated", "--R", "1", "--format", "json"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["ergodicity"]["non_ergodic"] is False

    def test_schedule_and_supplier_artifacts(self, runner, tmp_path):
        out = tmp_path / "diag"
        result = runner.invoke(main, ["diagnose", "--N", "2", "--R", "2", "--cycles", "50", "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        schedule = pd.read_csv(out / "schedule.csv")
        assert list(schedule.columns) == ["cycle", "retailer", "phase"]
        assert len(schedule) == 100
        supplier = pd.read_csv(out / "supplier.csv")
        assert list(supplier.columns) == ["t", "Z"]
        assert supplier["t"].tolist() == list(range(1, 101))

    def test_binomial_schedule_has_ordered_flag(self, runner, tmp_path):
        out = tmp_path / "diag"
        result = runner.invoke(main, ["diagnose", "--schedule", "lpw_binomial", "--N", "2", "--R", "2",
                                      "--cycles", "50", "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        schedule = pd.read_csv(out / "schedule.csv")
        assert list(schedule.columns) == ["cycle", "phase", "retailer", "ordered"]
        assert set(schedule["ordered"]) <= {0, 1}

    def test_pmf_csv(self, runner):
        result = runner.invoke(main, ["diagnose", "--schedule", "random", "--cycles", "1000", "--format", "csv"])
        assert result.exit_code == 0, result.output
        assert result.output.splitlines()[0] == "phase,value,probability,binomial"


class TestDefaults:
    def test_text(self, runner):
        result = runner.invoke(main, ["defaults"])
        assert result.exit_code == 0
        assert "BULLWHIP_SEED" in result.output
        assert "lpw-section1" in result.output

    def test_json(self, runner):
        result = runner.invoke(main, ["defaults", "--format", "json"])
        assert json.loads(result.output)["cycles"]["default"] == 100_000
