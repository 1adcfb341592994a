import csv
import json
import os
from dataclasses import replace

import pytest

from conftest import desk_config, gap_config, small_ring_config
from volsim import cli
from volsim.config import (AppConfig, config_to_dict, default_config,
                           parse_config, parse_dict, save_config)
from volsim.domain import ChannelParams, CostWeights
from volsim.errors import ConfigParseError, InvalidConfigError
from volsim.pso import PsoConfig
from volsim.rl import RlConfig


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def small_config_dict(**scenario_over):
    scenario = dict(area=[900.0, 20.0], vehicle_count=8, rsu_count=3,
                    mobility_kind="highway_ring", speed_range=[10.0, 25.0],
                    arrival_rate_per_vehicle=0.08, task_size_range=[8e6, 3.2e7],
                    duration=40.0, dt=0.5, seed=7, vehicle_cpu_hz=2.5e8)
    scenario.update(scenario_over)
    return {"scenario": scenario}


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestParseConfig:
    def test_empty_config_gives_defaults(self, tmp_path):
        path = write_config(tmp_path, {})
        app = parse_config(path)
        assert app == default_config()
        assert app.scenario.vehicle_count == 200
        assert app.scenario.rsu_count == 15
        assert app.scenario.coverage_radius_m == 300.0
        assert app.scenario.task_size_range == (8e6, 8e7)
        assert app.scenario.intensity_range == (500.0, 1000.0)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_config(tmp_path, {"scenaro": {}})
        with pytest.raises(ConfigParseError, match="scenaro"):
            parse_config(path)

    def test_unknown_key_rejected_by_name(self, tmp_path):
        path = write_config(tmp_path, {"scenario": {"vehicle_cout": 5}})
        with pytest.raises(ConfigParseError, match="scenario.vehicle_cout"):
            parse_config(path)

    def test_invalid_value_names_field(self, tmp_path):
        path = write_config(tmp_path, {"scenario": {"vehicle_count": -1}})
        with pytest.raises(InvalidConfigError, match="vehicle_count"):
            parse_config(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigParseError):
            parse_config(str(path))

    def test_round_trip_identity(self, tmp_path):
        data = small_config_dict()
        data["weights"] = {"lam": 0.25}
        data["rl"] = {"episodes": 12, "alpha": 0.2}
        data["pso"] = {"particles": 9, "batch_window_s": 0.5}
        app = parse_dict(data)
        path = tmp_path / "round.json"
        save_config(app, str(path))
        again = parse_config(str(path))
        assert again == app
        save_config(again, str(path.with_suffix(".2.json")))
        assert path.read_text() == path.with_suffix(".2.json").read_text()


class TestExitCodes:
    def test_success_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, small_config_dict())
        out = tmp_path / "out"
        assert cli.main(["simulate", "--config", cfg, "--strategy", "nearest",
                         "--seed", "3", "--out", str(out)]) == 0
        assert (out / "metrics_nearest_3.csv").exists()
        assert (out / "summary.json").exists()

    def test_usage_error_is_one(self, tmp_path, capsys):
        assert cli.main(["simulate", "--bogus-flag"]) == 1
        assert cli.main(["not-a-verb"]) == 1

    def test_parse_error_is_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert cli.main(["simulate", "--config", str(bad), "--out",
                         str(tmp_path / "o")]) == 1

    def test_validation_error_is_two_and_names_field(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"scenario": {"vehicle_count": -1}})
        code = cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "vehicle_count" in capsys.readouterr().err

    def test_hybrid_without_models_is_two(self, tmp_path, capsys):
        cfg = write_config(tmp_path, small_config_dict())
        code = cli.main(["simulate", "--config", cfg, "--strategy", "hybrid",
                         "--out", str(tmp_path / "o")])
        assert code == 2
        assert "hybrid" in capsys.readouterr().err

    def test_degenerate_predictor_dataset_is_two(self, tmp_path, capsys):
        # full-coverage scenario where offloading always wins: single class
        data = small_config_dict()
        code = cli.main(["train-predictor", "--config",
                         write_config(tmp_path, data), "--samples", "30",
                         "--out", str(tmp_path / "o")])
        assert code == 2
        assert "single class" in capsys.readouterr().err


class TestSweep:
    def test_file_contract_and_consistency(self, tmp_path):
        cfg = write_config(tmp_path, small_config_dict())
        out = tmp_path / "sweep"
        assert cli.main(["sweep", "--config", cfg, "--strategies", "nearest",
                         "--seeds", "1,2", "--out", str(out), "--jobs", "1"]) == 0
        files = sorted(os.listdir(out))
        assert files == ["fig_failure_channel.csv", "fig_latency_energy.csv",
                         "fig_offload_throughput.csv", "metrics_nearest_1.csv",
                         "metrics_nearest_2.csv", "summary.json"]
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["runs"]) == 2
        for rec in summary["runs"]:
            rows = read_csv(out / f"metrics_nearest_{rec['seed']}.csv")
            assert rows[0] == ["task_id", "decision", "status", "latency_s",
                               "energy_j", "completed_at"]
            body = rows[1:]
            assert len(body) == rec["total_tasks"]
            by_status = {}
            for row in body:
                by_status[row[2]] = by_status.get(row[2], 0) + 1
            for status, count in rec["totals"].items():
                assert by_status.get(status, 0) == count

    def test_rerun_byte_identical_metrics(self, tmp_path):
        cfg = write_config(tmp_path, small_config_dict())
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["sweep", "--config", cfg,
                             "--strategies", "local,nearest,greedy",
                             "--seeds", "1,2,3", "--out", str(out)]) == 0
            outs.append(out)
        for fname in sorted(os.listdir(outs[0])):
            if fname.endswith(".csv"):
                assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes(), fname

    def test_fig_csvs_have_header_and_data(self, tmp_path):
        cfg = write_config(tmp_path, small_config_dict())
        out = tmp_path / "figs"
        assert cli.main(["sweep", "--config", cfg, "--strategies", "local,nearest",
                         "--seeds", "1", "--out", str(out), "--jobs", "1"]) == 0
        for name in ("fig_latency_energy.csv", "fig_offload_throughput.csv",
                     "fig_failure_channel.csv"):
            rows = read_csv(out / name)
            assert len(rows) >= 3  # header + one row per strategy


class TestTraining:
    def test_train_rl_outputs(self, tmp_path):
        data = small_config_dict(vehicle_count=5, duration=20.0)
        data["rl"] = {"episodes": 2}
        cfg = write_config(tmp_path, data)
        out = tmp_path / "rl"
        assert cli.main(["train-rl", "--config", cfg, "--out", str(out)]) == 0
        rows = read_csv(out / "fig_reward_convergence.csv")
        assert rows[0] == ["episode", "mean_reward"]
        assert len(rows) == 3
        qdata = json.loads((out / "qtable.json").read_text())
        assert qdata["n_actions"] == 4

    def test_train_rl_single_episode_row(self, tmp_path):
        data = small_config_dict(vehicle_count=5, duration=20.0)
        cfg = write_config(tmp_path, data)
        out = tmp_path / "rl1"
        assert cli.main(["train-rl", "--config", cfg, "--episodes", "1",
                         "--out", str(out)]) == 0
        assert len(read_csv(out / "fig_reward_convergence.csv")) == 2

    def test_train_rl_deterministic_files(self, tmp_path):
        data = small_config_dict(vehicle_count=5, duration=20.0)
        data["rl"] = {"episodes": 2}
        cfg = write_config(tmp_path, data)
        blobs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert cli.main(["train-rl", "--config", cfg, "--out", str(out)]) == 0
            blobs.append((out / "qtable.json").read_bytes())
        assert blobs[0] == blobs[1]

    def test_train_predictor_outputs(self, tmp_path):
        # coverage holes give both labels
        data = small_config_dict(area=[3000.0, 20.0], vehicle_count=20,
                                 duration=60.0, coverage_radius_m=200.0)
        cfg = write_config(tmp_path, data)
        out = tmp_path / "pred"
        assert cli.main(["train-predictor", "--config", cfg, "--samples", "200",
                         "--epochs", "100", "--out", str(out)]) == 0
        model = json.loads((out / "predictor.json").read_text())
        assert len(model["weights"]) == 6
        rows = read_csv(out / "predictor_dataset.csv")
        assert len(rows) >= 201
        assert rows[0][-1] == "label"

    def test_pso_trace_output(self, tmp_path):
        data = small_config_dict()
        data["pso"] = {"particles": 10, "iterations": 15}
        cfg = write_config(tmp_path, data)
        out = tmp_path / "trace"
        assert cli.main(["pso-trace", "--config", cfg, "--window-size", "4",
                         "--out", str(out)]) == 0
        rows = read_csv(out / "fig_pso_convergence.csv")
        assert rows[0] == ["iteration", "best_fitness"]
        assert len(rows) == 16
        fits = [float(r[1]) for r in rows[1:]]
        assert all(b <= a + 1e-15 for a, b in zip(fits, fits[1:]))


class TestHybridEndToEnd:
    def test_simulate_hybrid_with_trained_models(self, tmp_path):
        data = small_config_dict(vehicle_count=6, duration=30.0)
        data["rl"] = {"episodes": 2}
        data["pso"] = {"particles": 8, "iterations": 12, "batch_window_s": 0.5}
        cfg = write_config(tmp_path, data)
        gap = small_config_dict(area=[3000.0, 20.0], vehicle_count=20,
                                duration=60.0, coverage_radius_m=200.0)
        gap_cfg = write_config(tmp_path, gap, name="gap.json")
        rl_out = tmp_path / "rl"
        pred_out = tmp_path / "pred"
        assert cli.main(["train-rl", "--config", cfg, "--out", str(rl_out)]) == 0
        assert cli.main(["train-predictor", "--config", gap_cfg, "--samples",
                         "150", "--epochs", "100", "--out", str(pred_out)]) == 0
        out = tmp_path / "hyb"
        assert cli.main(["simulate", "--config", cfg, "--strategy", "hybrid",
                         "--seed", "4", "--out", str(out),
                         "--qtable", str(rl_out / "qtable.json"),
                         "--predictor", str(pred_out / "predictor.json")]) == 0
        assert (out / "metrics_hybrid_4.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["runs"][0]["strategy"] == "hybrid"
