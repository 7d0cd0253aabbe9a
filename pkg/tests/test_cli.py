import json
import math
import os

import numpy as np
import pytest

from quarterstep.cli import main


def run_cli(args):
    return main(args)


class TestGenData:
    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run_cli(["gen-data", "--d", "10", "--r", "10", "--seed", "7",
                        "--out", str(a)]) == 0
        assert run_cli(["gen-data", "--d", "10", "--r", "10", "--seed", "7",
                        "--out", str(b)]) == 0
        assert (a / "dataset.csv").read_bytes() == (b / "dataset.csv").read_bytes()

    def test_sidecar_metadata(self, tmp_path):
        out = tmp_path / "run"
        run_cli(["gen-data", "--d", "4", "--r", "5", "--seed", "1",
                 "--out", str(out)])
        meta = json.loads((out / "dataset.csv.meta.json").read_text())
        assert meta["command"] == "gen-data"
        assert meta["master_seed"] == 1
        assert "config_hash" in meta and "version" in meta
        echo = json.loads((out / "echo.json").read_text())
        assert echo["config"]["d"] == 4

    def test_missing_required_flag_is_config_error(self, tmp_path, capsys):
        code = run_cli(["gen-data", "--d", "4", "--out", str(tmp_path / "x")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 1


class TestPlan:
    def test_example_contains_one_sixth(self, tmp_path):
        out = tmp_path / "plan"
        code = run_cli(["plan", "--m", "1", "--M", "1", "--d", "100",
                        "--eps", "0.1", "--delta", "0.1", "--start", "warm",
                        "--omega", "1", "--out", str(out)])
        assert code == 0
        plan = json.loads((out / "plan.json").read_text())
        assert plan["T"] == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert plan["Delta"] == pytest.approx(1.0 / 288.0, abs=1e-15)

    def test_cold_without_b_fails_as_config_error(self, tmp_path, capsys):
        code = run_cli(["plan", "--m", "1", "--M", "2", "--d", "10",
                        "--start", "cold", "--out", str(tmp_path / "p")])
        assert code == 1
        assert json.loads(capsys.readouterr().err)["exit_code"] == 1


class TestSample:
    def test_uhmc_trace_rows_and_grad_evals(self, tmp_path):
        out = tmp_path / "s"
        code = run_cli(["sample", "--target", "gaussian", "--d", "2",
                        "--kind", "uhmc", "--eta", "0.5", "--T", "1.0",
                        "--imax", "10", "--seed", "3", "--out", str(out)])
        assert code == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert len(lines) == 1 + 11
        summary = json.loads((out / "summary.json").read_text())
        assert summary["grad_evals"] == 10 * 3
        assert (out / "trace.png").exists()

    def test_rerun_from_echo_is_bit_identical(self, tmp_path):
        first = tmp_path / "one"
        second = tmp_path / "two"
        args = ["sample", "--target", "gaussian", "--d", "3", "--kind", "mhmc",
                "--eta", "0.2", "--T", "1.0", "--imax", "25", "--seed", "11",
                "--out", str(first)]
        assert run_cli(args) == 0
        assert run_cli(["sample", "--config", str(first / "echo.json"),
                        "--out", str(second)]) == 0
        assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()
        assert (first / "summary.json").read_bytes() == (second / "summary.json").read_bytes()

    def test_logistic_round_trip(self, tmp_path):
        data_dir = tmp_path / "data"
        run_cli(["gen-data", "--d", "4", "--r", "6", "--seed", "2",
                 "--out", str(data_dir)])
        out = tmp_path / "s"
        code = run_cli(["sample", "--target", "logistic", "--dataset",
                        str(data_dir / "dataset.csv"), "--kind", "mala",
                        "--eta", "0.2", "--imax", "50", "--seed", "4",
                        "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["grad_evals"] == 51

    def test_missing_dataset_is_config_error(self, tmp_path, capsys):
        code = run_cli(["sample", "--target", "logistic", "--dataset",
                        str(tmp_path / "nope.csv"), "--kind", "ula",
                        "--eta", "0.1", "--imax", "5", "--out",
                        str(tmp_path / "o")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "dataset" in err["message"]

    def test_explicit_start(self, tmp_path):
        out = tmp_path / "s"
        code = run_cli(["sample", "--target", "gaussian", "--d", "2",
                        "--kind", "ula", "--eta", "0.1", "--imax", "5",
                        "--start", "explicit", "--x0", "1.5,-0.5",
                        "--out", str(out)])
        assert code == 0
        first_row = (out / "trace.csv").read_text().splitlines()[1].split(",")
        assert float(first_row[1]) == 1.5 and float(first_row[2]) == -0.5

    def test_bad_kind_is_config_error(self, tmp_path, capsys):
        code = run_cli(["sample", "--target", "gaussian", "--d", "2",
                        "--kind", "nuts", "--imax", "5",
                        "--out", str(tmp_path / "o")])
        assert code == 1
        assert json.loads(capsys.readouterr().err)["error"] == "CliConfigError"


class TestCouple:
    def test_writes_csv_and_figure(self, tmp_path):
        out = tmp_path / "c"
        code = run_cli(["couple", "--target", "gaussian", "--d", "3",
                        "--kind", "idealized", "--T", "0.5", "--imax", "20",
                        "--seed", "5", "--out", str(out)])
        assert code == 0
        lines = (out / "coupling.csv").read_text().splitlines()
        assert lines[0] == "step,distance,ratio"
        assert len(lines) == 1 + 21
        assert (out / "coupling.png").exists()

    def test_distances_contract_on_gaussian(self, tmp_path):
        out = tmp_path / "c"
        run_cli(["couple", "--target", "gaussian", "--d", "2", "--kind", "uhmc",
                 "--eta", "0.05", "--T", "0.3", "--imax", "40", "--seed", "6",
                 "--out", str(out)])
        rows = (out / "coupling.csv").read_text().splitlines()[1:]
        first = float(rows[0].split(",")[1])
        last = float(rows[-1].split(",")[1])
        assert last < first


class TestRegularityCommand:
    def test_report_schema(self, tmp_path):
        data_dir = tmp_path / "data"
        run_cli(["gen-data", "--d", "4", "--r", "6", "--seed", "3",
                 "--out", str(data_dir)])
        out = tmp_path / "r"
        code = run_cli(["regularity", "--dataset", str(data_dir / "dataset.csv"),
                        "--restarts", "2", "--seed", "0", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "regularity.json").read_text())
        for key in ("incoherence", "incoherence_normalized", "m", "M", "b",
                    "L_inf_bound", "L2_estimate", "L_inf_estimate"):
            assert key in report
        assert report["L_inf_estimate"] <= report["L_inf_bound"] + 1e-6


class TestBenchmarkCommand:
    def test_small_sweep_artifacts(self, tmp_path):
        data_dir = tmp_path / "data"
        run_cli(["gen-data", "--d", "4", "--r", "4", "--seed", "8",
                 "--out", str(data_dir)])
        out = tmp_path / "b"
        code = run_cli(["benchmark", "--target", "logistic", "--dataset",
                        str(data_dir / "dataset.csv"), "--budget", "1500",
                        "--eta-grid", "0.2,0.4", "--bins", "8",
                        "--ref-steps", "3000", "--seed", "9", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "benchmark.json").read_text())
        assert len(payload["cells"]) == 8  # 4 kinds x 2 etas
        assert (out / "benchmark.csv").exists()
        assert (out / "benchmark.png").exists()


class TestScalingCommand:
    def test_small_sweep(self, tmp_path):
        out = tmp_path / "sc"
        code = run_cli(["scaling", "--d-list", "4,16", "--eps", "0.1",
                        "--T", "1.0", "--seed", "0", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "scaling.json").read_text())
        assert payload["slope"] < 0.0
        lines = (out / "scaling.csv").read_text().splitlines()
        assert lines[0] == "d,eta_star"
        assert (out / "scaling.png").exists()


class TestConfigPrecedence:
    def test_flags_override_config_file(self, tmp_path):
        config = tmp_path / "conf.json"
        config.write_text(json.dumps({"d": 4, "r": 4, "seed": 1}))
        out = tmp_path / "g"
        run_cli(["gen-data", "--config", str(config), "--r", "6",
                 "--out", str(out)])
        echo = json.loads((out / "echo.json").read_text())
        assert echo["config"]["d"] == 4      # from file
        assert echo["config"]["r"] == 6      # flag wins
        lines = (out / "dataset.csv").read_text().splitlines()
        assert len(lines) == 1 + 6

    def test_wrong_command_config_rejected(self, tmp_path, capsys):
        config = tmp_path / "conf.json"
        config.write_text(json.dumps({"command": "plan", "config": {"m": 1.0}}))
        code = run_cli(["gen-data", "--config", str(config), "--d", "3",
                        "--r", "3", "--out", str(tmp_path / "x")])
        assert code == 1
        assert json.loads(capsys.readouterr().err)["error"] == "CliConfigError"
