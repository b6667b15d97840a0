"""Command-line entry point.

Subcommands wire the full pipeline: synthesize signals, train ensembles,
evaluate, calibrate, sweep hyperparameters, and predict from saved
checkpoints. Every command is deterministic for a fixed config and seed
(jobs=1), and all artifacts are plain CSV/JSON files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .calibrate import METHODS, calibrate_ensemble
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config, save_config
from .ensemble import ProbForecast, predict_batch, train_ensemble, write_forecast_csv
from .errors import ShapeMismatchError, WavecastError
from .metrics import evaluation_report, reliability, write_reliability_csv
from .pipeline import SPLITS, eval_dataset, load_input_series, training_datasets
from .series import read_series_csv, write_series_csv
from .synth import WAVE_KINDS, generate, preset

CONFIG_ENV = "WAVECAST_CONFIG"
JOBS_ENV = "WAVECAST_JOBS"

_CONFIG_OVERRIDES = (
    "hidden", "window", "interval", "step", "models", "dt", "input_unit",
    "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    "calibration_method",
)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    config = load_config(path) if path else RunConfig()
    overrides = {}
    for name in _CONFIG_OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if "jobs" not in overrides and os.environ.get(JOBS_ENV):
        overrides["jobs"] = int(os.environ[JOBS_ENV])
    return dataclasses.replace(config, **overrides) if overrides else config


def _add_config_flags(p: argparse.ArgumentParser, *names: str) -> None:
    flag_types = {
        "hidden": int, "window": int, "interval": int, "step": int,
        "models": int, "epochs": int, "batch_size": int, "patience": int,
        "seed": int, "jobs": int, "dt": float, "lr": float,
        "input_unit": str, "calibration_method": str,
    }
    for name in names:
        p.add_argument(
            f"--{name.replace('_', '-')}", type=flag_types[name], default=None
        )


def cmd_synth(args: argparse.Namespace) -> int:
    spec = preset(args.preset, seed=args.seed, duration=args.duration)
    if args.noise_std is not None:
        spec = dataclasses.replace(spec, noise_std=args.noise_std)
    series = generate(spec)
    write_series_csv(series, args.out)
    print(f"wrote {len(series)} samples ({series.dt}s per step) to {args.out}")
    return 0


def _write_json(doc: dict, path: str | None) -> None:
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _train(data_path: str, config: RunConfig):
    series = load_input_series(data_path, config)
    train_ds, val_ds, _norm = training_datasets(series, config)
    return train_ensemble(
        train_ds,
        val_ds,
        config.arch,
        config.train_config(),
        n_members=config.models,
        base_seed=config.seed,
        unit=series.unit,
        jobs=config.jobs,
    )


def cmd_train(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ensemble, reports = _train(args.data, config)
    save_checkpoint(ensemble, args.out)
    if args.curves:
        _write_curves(reports, args.curves)
    total = sum(r.wall_clock for r in reports)
    for i, r in enumerate(reports):
        print(
            f"member {i}: best epoch {r.best_epoch} "
            f"(val nll {r.val_nll[r.best_epoch - 1]:.6f}), "
            f"{len(r.val_nll)} epochs run"
        )
    print(f"trained {ensemble.size} members in {total:.1f}s; checkpoint: {args.out}")
    return 0


def _write_curves(reports, path: str) -> None:
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["member", "epoch", "train_nll", "val_nll"])
        for i, r in enumerate(reports):
            for e, (tr, va) in enumerate(zip(r.train_nll, r.val_nll), start=1):
                writer.writerow([i, e, repr(tr), repr(va)])


def _config_for_checkpoint(config: RunConfig, ensemble) -> RunConfig:
    # The checkpoint owns the architecture; the config only contributes the
    # slicing stride and data handling.
    _h, l, m = ensemble.arch
    return dataclasses.replace(config, window=l, interval=m)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ensemble = load_checkpoint(args.ckpt)
    config = _config_for_checkpoint(config, ensemble)
    series = load_input_series(args.data, config)
    ds = eval_dataset(series, config, split=args.split, step=args.step)
    mu, var = predict_batch(ensemble, ds.inputs, apply_calibration=args.calibrated)
    report = evaluation_report(
        mu, var, ds.targets, unit=ensemble.unit, levels=config.ci_levels
    )
    report["split"] = args.split
    report["calibrated"] = bool(args.calibrated)
    _write_json(report, args.metrics_out)
    if args.reliability_out:
        curve = reliability(
            mu.ravel(), var.ravel(), ds.targets.ravel(), levels=config.ci_levels
        )
        write_reliability_csv(curve, args.reliability_out)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    method = args.method or config.calibration_method
    ensemble = load_checkpoint(args.ckpt)
    config = _config_for_checkpoint(config, ensemble)
    series = load_input_series(args.data, config)
    val_ds = eval_dataset(series, config, split="val", step=args.step)

    if args.curves_prefix:
        mu, var = predict_batch(ensemble, val_ds.inputs)
        before = reliability(
            mu.ravel(), var.ravel(), val_ds.targets.ravel(), levels=config.ci_levels
        )
        write_reliability_csv(before, args.curves_prefix + "_before.csv")

    report = calibrate_ensemble(ensemble, val_ds, method=method, levels=config.ci_levels)

    if args.curves_prefix:
        s2 = report.s * report.s
        after = reliability(
            mu.ravel(), var.ravel() * s2, val_ds.targets.ravel(),
            levels=config.ci_levels,
        )
        write_reliability_csv(after, args.curves_prefix + "_after.csv")

    out = args.out or args.ckpt
    save_checkpoint(ensemble, out)
    _write_json(report.to_dict(), args.report_out)
    return 0


def _parse_values(raw: str) -> list[int]:
    raw = raw.strip()
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in raw.split(",") if v]


def _sweep_metrics(mu, var, targets, levels) -> dict:
    report = evaluation_report(mu, var, targets, unit="", levels=levels)
    return {k: report[k] for k in ("rmse", "mape", "r2", "auce")}


def cmd_sweep(args: argparse.Namespace) -> int:
    import csv as _csv

    config = _resolve_config(args)
    values = _parse_values(args.values)
    if not values:
        raise WavecastError("sweep needs at least one value")
    rows = []

    if args.param == "predlength":
        bad = [v for v in values if not 1 <= v <= config.interval]
        if bad:
            raise WavecastError(
                f"prediction lengths {bad} exceed the interval {config.interval}"
            )
        ensemble, reports, test_ds = _sweep_train_once(args.data, config)
        train_seconds = sum(r.wall_clock for r in reports)
        mu, var = predict_batch(ensemble, test_ds.inputs)
        s = ensemble.calib
        for v in values:
            j = v - 1
            before = _sweep_metrics(
                mu[:, j : j + 1], var[:, j : j + 1],
                test_ds.targets[:, j : j + 1], config.ci_levels,
            )
            after = _sweep_metrics(
                mu[:, j : j + 1], var[:, j : j + 1] * s * s,
                test_ds.targets[:, j : j + 1], config.ci_levels,
            )
            rows.append(_sweep_row(args.param, v, before, after["auce"], s, train_seconds))
    else:
        field = {"window": "window", "interval": "interval", "models": "models"}[args.param]
        for v in values:
            cfg = dataclasses.replace(config, **{field: v})
            ensemble, reports, test_ds = _sweep_train_once(args.data, cfg)
            train_seconds = sum(r.wall_clock for r in reports)
            mu, var = predict_batch(ensemble, test_ds.inputs)
            s = ensemble.calib
            before = _sweep_metrics(mu, var, test_ds.targets, cfg.ci_levels)
            after = _sweep_metrics(mu, var * s * s, test_ds.targets, cfg.ci_levels)
            rows.append(_sweep_row(args.param, v, before, after["auce"], s, train_seconds))

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(
            ["param", "value", "rmse", "mape", "r2",
             "auce_before", "auce_after", "scale_factor", "train_seconds"]
        )
        writer.writerows(rows)
    print(f"swept {args.param} over {values}; results in {args.out}")
    return 0


def _sweep_row(param, value, before, auce_after, s, train_seconds):
    return [
        param, value,
        repr(before["rmse"]),
        "" if before["mape"] is None else repr(before["mape"]),
        repr(before["r2"]),
        repr(before["auce"]),
        repr(auce_after),
        repr(float(s)),
        repr(round(train_seconds, 3)),
    ]


def _sweep_train_once(data_path: str, config: RunConfig):
    ensemble, reports = _train(data_path, config)
    series = load_input_series(data_path, config)
    val_ds = eval_dataset(series, config, split="val")
    calibrate_ensemble(ensemble, val_ds, method=config.calibration_method,
                       levels=config.ci_levels)
    test_ds = eval_dataset(series, config, split="test")
    return ensemble, reports, test_ds


def cmd_predict(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ensemble = load_checkpoint(args.ckpt)
    window = read_series_csv(args.window_csv, dt=config.dt, unit=config.input_unit)
    if window.unit == "mbar":
        from .series import pressure_to_height

        window = pressure_to_height(window, rho=config.rho, g=config.g)
    expected = ensemble.arch[1]
    if len(window) != expected:
        raise ShapeMismatchError(
            f"window has {len(window)} samples but the model expects exactly {expected}"
        )
    mu, var = predict_batch(
        ensemble, window.values[None, :], apply_calibration=args.calibrated
    )
    forecast = ProbForecast(mu=mu[0], var=var[0], unit=ensemble.unit)
    write_forecast_csv(forecast, args.out)
    print(f"forecast of {mu.shape[1]} steps written to {args.out}")
    return 0


def cmd_config(args: argparse.Namespace) -> int:
    if args.action == "init":
        config = RunConfig()
        if args.out:
            save_config(config, args.out)
            print(f"default config written to {args.out}")
        else:
            sys.stdout.write(config.to_json())
        return 0
    raise WavecastError(f"unknown config action {args.action!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavecast",
        description="Probabilistic multi-step wave-height forecasting "
        "with LSTM deep ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic wave CSV")
    p.add_argument("--preset", choices=WAVE_KINDS, default="composite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=600.0, help="seconds")
    p.add_argument("--noise-std", type=float, default=None, help="meters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train an ensemble on a series CSV")
    p.add_argument("data")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--curves", default=None, help="training-curve CSV path")
    _add_config_flags(
        p, "hidden", "window", "interval", "step", "models", "dt", "input_unit",
        "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics for a checkpoint on a series CSV")
    p.add_argument("ckpt")
    p.add_argument("data")
    p.add_argument("--config", default=None)
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--step", type=int, default=None, help="evaluation stride")
    p.add_argument("--calibrated", action="store_true")
    p.add_argument("--metrics-out", default=None, help="JSON path (default stdout)")
    p.add_argument("--reliability-out", default=None, help="CSV path")
    _add_config_flags(
        p, "hidden", "window", "interval", "models", "dt", "input_unit",
        "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", help="fit the STD scaling factor on the val split")
    p.add_argument("ckpt")
    p.add_argument("data")
    p.add_argument("--config", default=None)
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--out", default=None, help="updated checkpoint (default: in place)")
    p.add_argument("--report-out", default=None, help="JSON path (default stdout)")
    p.add_argument("--curves-prefix", default=None,
                   help="write <prefix>_before.csv and <prefix>_after.csv")
    _add_config_flags(
        p, "hidden", "window", "interval", "models", "dt", "input_unit",
        "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    )
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="train/evaluate across one hyperparameter")
    p.add_argument("data")
    p.add_argument("--param", required=True,
                   choices=("window", "interval", "models", "predlength"))
    p.add_argument("--values", required=True,
                   help="comma list (100,200,300) or range (2..10)")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="results CSV")
    _add_config_flags(
        p, "hidden", "window", "interval", "step", "models", "dt", "input_unit",
        "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="forecast from one input window CSV")
    p.add_argument("ckpt")
    p.add_argument("window_csv", metavar="window",
                   help="CSV with exactly window-size samples")
    p.add_argument("--config", default=None)
    p.add_argument("--calibrated", action="store_true")
    p.add_argument("--out", required=True, help="forecast CSV")
    _add_config_flags(
        p, "hidden", "window", "interval", "step", "models", "dt", "input_unit",
        "epochs", "batch_size", "lr", "patience", "seed", "jobs",
    )
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("config", help="configuration helpers")
    p.add_argument("action", choices=("init",))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WavecastError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error[invalid-input]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
