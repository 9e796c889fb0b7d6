"""Command-line front end: subcommands, config validation, CSV outputs."""
import json
import os

import numpy as np
import pytest

from vrstream.cli import main, sim_config_from_dict, ConfigError
from vrstream.caching import load_profile_csv
from vrstream.traces import load_traces


def run_cli(*argv):
    return main(list(argv))


class TestConfigParsing:
    def test_unknown_key_lists_valid_keys(self):
        with pytest.raises(ConfigError, match="unknown config key.*'paylod_scale'"):
            sim_config_from_dict({"paylod_scale": 0.2})

    def test_unknown_channel_key(self):
        with pytest.raises(ConfigError, match="unknown channel key"):
            sim_config_from_dict({"channel": {"bandwith": 1.0}})

    def test_bad_value_names_field(self):
        with pytest.raises(ConfigError, match="scheme"):
            sim_config_from_dict({"scheme": "warp"})

    def test_num_users_roundtrip(self):
        cfg = sim_config_from_dict({"num_users": 24, "scheme": "nml"})
        assert cfg.num_users == 24 and cfg.catalog_size == 2

    def test_channel_nested(self):
        cfg = sim_config_from_dict({"channel": {"ema_beta": 0.5}})
        assert cfg.channel.ema_beta == 0.5


class TestGenerateAndEvaluate:
    def test_generate_traces_and_reload(self, tmp_path):
        out = str(tmp_path / "traces.csv")
        assert run_cli("generate-traces", "--out", out, "--users", "3",
                       "--frames", "50", "--seed", "4") == 0
        traces = load_traces(out)
        assert len(traces) == 3
        assert len(traces[0]) == 50

    def test_generate_population_grouping(self, tmp_path):
        out = str(tmp_path / "pop.csv")
        assert run_cli("generate-traces", "--out", out, "--videos", "2",
                       "--users", "3", "--frames", "30") == 0
        assert len(load_traces(out)) == 6

    def test_evaluate_baseline_on_constant_traces_is_zero(self, tmp_path, capsys):
        traces_path = str(tmp_path / "t.csv")
        run_cli("generate-traces", "--out", traces_path, "--users", "2",
                "--frames", "60", "--volatility", "0")
        out_path = str(tmp_path / "table.csv")
        assert run_cli("evaluate-predictor", "--traces", traces_path,
                       "--horizons", "5,10", "--history", "5",
                       "--out", out_path) == 0
        rows = [line.split(",") for line in
                open(out_path).read().strip().splitlines()[1:]]
        assert all(float(v) < 1e-6 for _, v in rows)

    def test_train_writes_checkpoint(self, tmp_path):
        traces_path = str(tmp_path / "t.csv")
        run_cli("generate-traces", "--out", traces_path, "--users", "4",
                "--frames", "60")
        ckpt = str(tmp_path / "model.npz")
        assert run_cli("train", "--traces", traces_path, "--out", ckpt,
                       "--history", "5", "--horizon", "5", "--epochs", "2",
                       "--folds", "2", "--hidden", "8", "--stride", "3") == 0
        assert os.path.exists(ckpt)


class TestBuildPopularity:
    def test_hotspot_gives_rank_one_fraction_one(self, tmp_path):
        traces_path = str(tmp_path / "t.csv")
        run_cli("generate-traces", "--out", traces_path, "--users", "6",
                "--frames", "20", "--volatility", "0",
                "--hotspot-fraction", "1.0")
        out = str(tmp_path / "profile.csv")
        assert run_cli("build-popularity", "--traces", traces_path,
                       "--out", out, "--grid-n", "3",
                       "--users-per-video", "6") == 0
        profile = load_profile_csv(out)
        for ranked in profile.ranked.values():
            assert ranked[0][1] == 1.0


class TestSimulate:
    def test_simulate_writes_metrics_row(self, tmp_path):
        cfg = {"sim_time_s": 1.0, "users_per_video": 2, "catalog_size": 1,
               "scheme": "nml", "payload_scale": 0.2}
        cfg_path = str(tmp_path / "sim.json")
        with open(cfg_path, "w") as fh:
            json.dump(cfg, fh)
        out = str(tmp_path / "metrics.csv")
        assert run_cli("simulate", "--config", cfg_path, "--predictor", "none",
                       "--out", out, "--seed", "3") == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0].startswith("scheme,num_users,horizon,grid,seed")
        row = lines[1].split(",")
        assert row[0] == "nml" and row[4] == "3"

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg_path = str(tmp_path / "sim.json")
        with open(cfg_path, "w") as fh:
            json.dump({"bogus_key": 1}, fh)
        assert run_cli("simulate", "--config", cfg_path, "--out",
                       str(tmp_path / "m.csv")) == 2
        assert "bogus_key" in capsys.readouterr().err

    def test_set_override(self, tmp_path):
        out = str(tmp_path / "m.csv")
        assert run_cli("simulate", "--set", "sim_time_s=1.0",
                       "--set", "users_per_video=2", "--set", "catalog_size=1",
                       "--set", "scheme=nml", "--set", "payload_scale=0.2",
                       "--predictor", "none", "--out", out) == 0
        assert os.path.exists(out)


class TestSweep:
    def spec(self, tmp_path, seeds):
        return {
            "base": {"sim_time_s": 1.0, "users_per_video": 2,
                     "payload_scale": 0.2, "catalog_size": 1},
            "schemes": ["nml", "ml"],
            "sweep": {"num_users": [2, 4]},
            "seeds": seeds,
            "traces": {"preset": "slow"},
            "predictor": "baseline",
            "output_dir": str(tmp_path / "out"),
        }

    def test_row_count_is_product(self, tmp_path):
        spec_path = str(tmp_path / "sweep.json")
        with open(spec_path, "w") as fh:
            json.dump(self.spec(tmp_path, [0, 1]), fh)
        assert run_cli("sweep", "--spec", spec_path) == 0
        runs = open(tmp_path / "out" / "runs.csv").read().strip().splitlines()
        assert len(runs) - 1 == 2 * 2 * 2  # schemes x sweep points x seeds
        agg = open(tmp_path / "out" / "aggregate.csv").read().strip().splitlines()
        assert len(agg) - 1 == 4

    def test_duplicate_seeds_deduplicated(self, tmp_path, caplog):
        spec_path = str(tmp_path / "sweep.json")
        with open(spec_path, "w") as fh:
            json.dump(self.spec(tmp_path, [0, 0, 1]), fh)
        assert run_cli("sweep", "--spec", spec_path) == 0
        runs = open(tmp_path / "out" / "runs.csv").read().strip().splitlines()
        assert len(runs) - 1 == 8

    def test_rerun_is_byte_identical(self, tmp_path):
        spec_path = str(tmp_path / "sweep.json")
        spec = self.spec(tmp_path, [0])
        spec["sweep"] = {}
        with open(spec_path, "w") as fh:
            json.dump(spec, fh)
        assert run_cli("sweep", "--spec", spec_path) == 0
        first = open(tmp_path / "out" / "runs.csv", "rb").read()
        assert run_cli("sweep", "--spec", spec_path) == 0
        assert open(tmp_path / "out" / "runs.csv", "rb").read() == first

    def test_unrecognized_sweep_axis_rejected(self, tmp_path, capsys):
        spec = self.spec(tmp_path, [0])
        spec["sweep"] = {"warp_factor": [1]}
        spec_path = str(tmp_path / "sweep.json")
        with open(spec_path, "w") as fh:
            json.dump(spec, fh)
        assert run_cli("sweep", "--spec", spec_path) == 2
        assert "warp_factor" in capsys.readouterr().err


class TestDeterminismAcrossSchemes:
    @pytest.mark.parametrize("scheme", ["ml", "ml-cache", "nml", "nml-cache"])
    def test_same_seed_byte_identical_metrics_csv(self, tmp_path, scheme):
        spec = {
            "base": {"sim_time_s": 1.0, "users_per_video": 3, "catalog_size": 1,
                     "payload_scale": 0.2},
            "schemes": [scheme],
            "sweep": {},
            "seeds": [7],
            "traces": {"preset": "slow",
                       "params": {"hotspot_fraction": 0.5}},
            "predictor": "baseline",
        }
        blobs = []
        for attempt in ("a", "b"):
            out_dir = str(tmp_path / attempt)
            spec["output_dir"] = out_dir
            spec_path = str(tmp_path / f"sweep_{attempt}.json")
            with open(spec_path, "w") as fh:
                json.dump(spec, fh)
            assert run_cli("sweep", "--spec", spec_path) == 0
            blobs.append(open(os.path.join(out_dir, "runs.csv"), "rb").read())
        assert blobs[0] == blobs[1]
