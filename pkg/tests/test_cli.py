import csv
import json

import numpy as np
import pytest

from wavecast.cli import main
from wavecast.config import RunConfig, load_config

MICRO_FLAGS = [
    "--window", "30", "--interval", "10", "--step", "20", "--hidden", "6",
    "--models", "2", "--epochs", "6", "--patience", "6", "--seed", "11",
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Synthesized data and one trained checkpoint shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "wave.csv"
    assert main(["synth", "--preset", "regular", "--seed", "5",
                 "--duration", "80", "--out", str(data)]) == 0
    ckpt = root / "model.ckpt.json"
    assert main(["train", str(data), "--out", str(ckpt),
                 "--curves", str(root / "curves.csv"), *MICRO_FLAGS]) == 0
    return root


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestHelpAndErrors:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_unknown_command_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_file_reports_machine_code(self, capsys, tmp_path):
        code = main(["evaluate", str(tmp_path / "no.ckpt"), str(tmp_path / "no.csv")])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error[")


class TestConfigCommand:
    def test_init_writes_loadable_defaults(self, tmp_path):
        out = tmp_path / "config.json"
        assert main(["config", "init", "--out", str(out)]) == 0
        cfg = load_config(str(out))
        assert cfg == RunConfig()

    def test_defaults_mirror_baseline_setup(self, tmp_path, capsys):
        assert main(["config", "init"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["models"] == 5
        assert doc["hidden"] == 70
        assert doc["window"] == 300
        assert doc["interval"] == 70
        assert doc["step"] == 50
        assert doc["epochs"] == 3500
        assert doc["split_train"] == 0.8


class TestSynth:
    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["synth", "--preset", "composite", "--seed", "7",
                         "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_twenty_hertz_output(self, tmp_path):
        out = tmp_path / "regular.csv"
        assert main(["synth", "--preset", "regular", "--duration", "10",
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == ["timestamp", "value"]
        assert len(rows) == 1 + 200
        assert float(rows[2][0]) - float(rows[1][0]) == pytest.approx(0.05)


class TestTrainEvaluate:
    def test_train_writes_checkpoint_and_curves(self, workdir):
        assert (workdir / "model.ckpt.json").exists()
        rows = read_rows(workdir / "curves.csv")
        assert rows[0] == ["member", "epoch", "train_nll", "val_nll"]
        assert len(rows) == 1 + 2 * 6  # two members, six epochs each

    def test_evaluate_writes_report_and_reliability(self, workdir):
        metrics = workdir / "metrics.json"
        rel = workdir / "reliability.csv"
        assert main(["evaluate", str(workdir / "model.ckpt.json"),
                     str(workdir / "wave.csv"), *MICRO_FLAGS,
                     "--metrics-out", str(metrics),
                     "--reliability-out", str(rel)]) == 0
        doc = json.loads(metrics.read_text())
        assert doc["unit"] == "meter"
        assert doc["split"] == "test"
        assert {"rmse", "mape", "r2", "auce", "per_index"} <= set(doc)
        assert [e["index"] for e in doc["per_index"]] == [10]
        rows = read_rows(rel)
        assert rows[0] == ["p", "p_hat"]
        assert len(rows) == 100  # header + default 99 levels

    def test_evaluate_split_selection(self, workdir, capsys):
        assert main(["evaluate", str(workdir / "model.ckpt.json"),
                     str(workdir / "wave.csv"), *MICRO_FLAGS,
                     "--split", "train"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["split"] == "train"


class TestCalibrate:
    def test_calibrate_updates_checkpoint_and_emits_curves(self, workdir, capsys):
        ckpt = workdir / "model.ckpt.json"
        out = workdir / "calibrated.ckpt.json"
        prefix = str(workdir / "rel")
        assert main(["calibrate", str(ckpt), str(workdir / "wave.csv"),
                     *MICRO_FLAGS, "--out", str(out),
                     "--curves-prefix", prefix]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["s"] > 0
        assert report["nll_after"] <= report["nll_before"] + 1e-12
        doc = json.loads(out.read_text())
        assert doc["calibration_scale"] == report["s"]
        assert (workdir / "rel_before.csv").exists()
        assert (workdir / "rel_after.csv").exists()

    def test_calibrated_prediction_differs_only_in_width(self, workdir, tmp_path):
        ckpt = workdir / "calibrated.ckpt.json"
        window = tmp_path / "window.csv"
        assert main(["synth", "--preset", "regular", "--seed", "9",
                     "--duration", "1.5", "--out", str(window)]) == 0
        plain = tmp_path / "plain.csv"
        scaled = tmp_path / "scaled.csv"
        assert main(["predict", str(ckpt), str(window), "--out", str(plain)]) == 0
        assert main(["predict", str(ckpt), str(window), "--calibrated",
                     "--out", str(scaled)]) == 0
        rows_p = read_rows(plain)[1:]
        rows_s = read_rows(scaled)[1:]
        s = json.loads(ckpt.read_text())["calibration_scale"]
        for rp, rs in zip(rows_p, rows_s):
            assert rs[1] == rp[1]  # identical mean
            assert float(rs[2]) == pytest.approx(float(rp[2]) * s * s, rel=1e-12)


class TestPredict:
    def test_forecast_layout_and_ci(self, workdir, tmp_path):
        window = tmp_path / "window.csv"
        assert main(["synth", "--preset", "regular", "--seed", "9",
                     "--duration", "1.5", "--out", str(window)]) == 0
        out = tmp_path / "forecast.csv"
        assert main(["predict", str(workdir / "model.ckpt.json"), str(window),
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == ["step", "mu", "var", "ci95_lo", "ci95_hi"]
        assert len(rows) == 11
        z = 1.9599639845400532
        for row in rows[1:]:
            mu, var, lo, hi = (float(v) for v in row[1:])
            assert lo == pytest.approx(mu - z * np.sqrt(var), rel=1e-9)
            assert hi == pytest.approx(mu + z * np.sqrt(var), rel=1e-9)

    def test_wrong_window_length_names_expectation(self, workdir, tmp_path, capsys):
        window = tmp_path / "long.csv"
        assert main(["synth", "--preset", "regular", "--duration", "2.0",
                     "--out", str(window)]) == 0
        code = main(["predict", str(workdir / "model.ckpt.json"), str(window),
                     "--out", str(tmp_path / "x.csv")])
        assert code == 1
        err = capsys.readouterr().err
        assert "error[shape-mismatch]" in err
        assert "30" in err


class TestSweep:
    def test_single_value_sweep_matches_evaluate(self, workdir, capsys):
        out = workdir / "sweep_window.csv"
        assert main(["sweep", str(workdir / "wave.csv"), "--param", "window",
                     "--values", "30", "--out", str(out), *MICRO_FLAGS]) == 0
        capsys.readouterr()
        rows = read_rows(out)
        assert rows[0][:5] == ["param", "value", "rmse", "mape", "r2"]
        assert rows[1][0] == "window"
        assert main(["evaluate", str(workdir / "model.ckpt.json"),
                     str(workdir / "wave.csv"), *MICRO_FLAGS]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert float(rows[1][2]) == pytest.approx(doc["rmse"], rel=1e-12)
        assert float(rows[1][4]) == pytest.approx(doc["r2"], rel=1e-12)

    def test_models_sweep_emits_calibration_columns(self, workdir):
        out = workdir / "sweep_models.csv"
        assert main(["sweep", str(workdir / "wave.csv"), "--param", "models",
                     "--values", "1,2", "--out", str(out), *MICRO_FLAGS]) == 0
        rows = read_rows(out)
        header = rows[0]
        assert header == ["param", "value", "rmse", "mape", "r2",
                          "auce_before", "auce_after", "scale_factor",
                          "train_seconds"]
        assert [r[1] for r in rows[1:]] == ["1", "2"]
        for row in rows[1:]:
            assert float(row[7]) > 0  # fitted scaling factor
            assert float(row[8]) > 0  # training time recorded

    def test_predlength_sweep_slices_single_model(self, workdir):
        out = workdir / "sweep_pred.csv"
        assert main(["sweep", str(workdir / "wave.csv"), "--param", "predlength",
                     "--values", "1,5,10", "--out", str(out), *MICRO_FLAGS]) == 0
        rows = read_rows(out)
        assert [r[1] for r in rows[1:]] == ["1", "5", "10"]
        # One shared training run: identical wall clock on every row.
        assert len({r[8] for r in rows[1:]}) == 1

    def test_predlength_beyond_interval_rejected(self, workdir, capsys):
        code = main(["sweep", str(workdir / "wave.csv"), "--param", "predlength",
                     "--values", "11", "--out", str(workdir / "x.csv"),
                     *MICRO_FLAGS])
        assert code == 1
        assert "error[" in capsys.readouterr().err

    def test_range_value_syntax(self, workdir):
        out = workdir / "sweep_range.csv"
        assert main(["sweep", str(workdir / "wave.csv"), "--param", "predlength",
                     "--values", "2..4", "--out", str(out), *MICRO_FLAGS]) == 0
        rows = read_rows(out)
        assert [r[1] for r in rows[1:]] == ["2", "3", "4"]


class TestGuards:
    def test_short_series_reports_slice_sizes(self, workdir, tmp_path, capsys):
        short = tmp_path / "short.csv"
        assert main(["synth", "--preset", "regular", "--duration", "5",
                     "--out", str(short)]) == 0
        code = main(["train", str(short), "--out", str(tmp_path / "m.json"),
                     *MICRO_FLAGS])
        assert code == 1
        err = capsys.readouterr().err
        assert "error[insufficient-data]" in err
        assert "30" in err and "10" in err  # window and interval named

    def test_evaluate_empty_test_split(self, workdir, tmp_path, capsys):
        # Long enough overall but the 10% test split cannot fit one window.
        short = tmp_path / "shortish.csv"
        assert main(["synth", "--preset", "regular", "--duration", "15",
                     "--out", str(short)]) == 0
        code = main(["evaluate", str(workdir / "model.ckpt.json"), str(short),
                     *MICRO_FLAGS])
        assert code == 1
        assert "error[insufficient-data]" in capsys.readouterr().err


class TestEnvOverrides:
    def test_config_picked_up_from_environment(self, workdir, tmp_path, capsys,
                                               monkeypatch):
        cfg_path = tmp_path / "env-config.json"
        assert main(["config", "init", "--out", str(cfg_path)]) == 0
        doc = json.loads(cfg_path.read_text())
        doc.update({"window": 30, "interval": 10, "step": 20, "hidden": 6,
                    "models": 1, "epochs": 2, "patience": 2})
        cfg_path.write_text(json.dumps(doc))
        monkeypatch.setenv("WAVECAST_CONFIG", str(cfg_path))
        capsys.readouterr()
        ckpt = tmp_path / "env.ckpt.json"
        assert main(["train", str(workdir / "wave.csv"), "--out", str(ckpt)]) == 0
        saved = json.loads(ckpt.read_text())
        assert saved["arch"]["window"] == 30
        assert len(saved["members"]) == 1


class TestConfigPrecedence:
    def test_flags_override_config_file(self, workdir, tmp_path, capsys):
        cfg_path = tmp_path / "config.json"
        assert main(["config", "init", "--out", str(cfg_path)]) == 0
        doc = json.loads(cfg_path.read_text())
        doc.update({"window": 30, "interval": 10, "step": 20, "hidden": 6,
                    "models": 1, "epochs": 2, "patience": 2})
        cfg_path.write_text(json.dumps(doc))
        capsys.readouterr()
        ckpt = tmp_path / "m.ckpt.json"
        assert main(["train", str(workdir / "wave.csv"), "--config", str(cfg_path),
                     "--out", str(ckpt), "--models", "2"]) == 0
        saved = json.loads(ckpt.read_text())
        assert len(saved["members"]) == 2  # flag beat the config file
        assert saved["arch"]["window"] == 30  # config file beat defaults
