"""Glue between raw series and model-ready datasets.

The training path converts units, splits chronologically, fits min-max on
the train segment only, normalizes all segments with those constants, and
slices. The evaluation path slices raw segments so metrics come out in the
original input unit.
"""

from __future__ import annotations

from .config import RunConfig
from .errors import ConfigError
from .series import (
    NormParams,
    SliceSpec,
    TimeSeries,
    WindowedDataset,
    chrono_split,
    fit_minmax,
    normalize,
    pressure_to_height,
    read_series_csv,
    slice_windows,
)

SPLITS = ("train", "val", "test")


def load_input_series(path: str, config: RunConfig) -> TimeSeries:
    """Read a CSV and convert it to the unit the model operates in."""
    series = read_series_csv(path, dt=config.dt, unit=config.input_unit)
    if series.unit == "mbar":
        series = pressure_to_height(series, rho=config.rho, g=config.g)
    return series


def training_datasets(
    series: TimeSeries, config: RunConfig
) -> tuple[WindowedDataset, WindowedDataset, NormParams]:
    """Normalized train and validation datasets plus the fitted constants."""
    spec = config.slice_spec()
    train_seg, val_seg, _ = chrono_split(series, config.fractions)
    norm = fit_minmax(train_seg)
    train_ds = slice_windows(normalize(train_seg, norm), spec, norm=norm)
    val_ds = slice_windows(normalize(val_seg, norm), spec, norm=norm)
    return train_ds, val_ds, norm


def eval_dataset(
    series: TimeSeries, config: RunConfig, split: str = "test", step: int | None = None
) -> WindowedDataset:
    """Raw-unit dataset for one chronological split ('train'/'val'/'test')."""
    if split not in SPLITS:
        raise ConfigError(f"split must be one of {SPLITS}, got {split!r}")
    segments = dict(zip(SPLITS, chrono_split(series, config.fractions)))
    spec = config.slice_spec()
    if step is not None:
        spec = SliceSpec(window=spec.window, interval=spec.interval, step=step)
    return slice_windows(segments[split], spec)
