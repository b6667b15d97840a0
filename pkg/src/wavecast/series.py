"""Signal ingestion and preprocessing.

Raw sensor series come in as uniformly sampled scalar signals (pressure in
mbar or wave height in meters). This module converts units, fits and applies
min-max normalization, splits chronologically into train/validation/test
segments, and slices segments into supervised (window, interval) samples.

All operations are pure functions on immutable inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateRangeError,
    InsufficientDataError,
    NumericError,
    UnitMismatchError,
)

UNITS = ("mbar", "meter", "normalized", "dimensionless")

# Seawater defaults; overridable wherever a conversion is requested.
RHO_SEAWATER = 1025.0  # kg/m^3
G_STANDARD = 9.80665  # m/s^2


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    values : np.ndarray
        1-D float array, non-empty, all finite.
    dt : float
        Seconds per sample, > 0.
    unit : str
        One of ``mbar``, ``meter``, ``normalized``, ``dimensionless``.
    t0 : float, optional
        Epoch timestamp of the first sample.
    """

    values: np.ndarray
    dt: float
    unit: str = "dimensionless"
    t0: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise NumericError("series contains non-finite values")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}, expected one of {UNITS}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class NormParams:
    """Min-max scaling constants with a strictly positive range."""

    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateRangeError(
                f"max ({self.max}) must be strictly greater than min ({self.min})"
            )

    @property
    def range(self) -> float:
        return self.max - self.min


@dataclass(frozen=True)
class SliceSpec:
    """Slicing hyperparameters: input window, prediction interval, stride."""

    window: int
    interval: int
    step: int = 1

    def __post_init__(self):
        for name in ("window", "interval", "step"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class WindowedDataset:
    """Paired (input window, target interval) sample matrices.

    ``inputs`` has shape (N, window) and ``targets`` (N, interval); sample i
    is contiguous in the source series with the target immediately following
    the input. ``norm`` is the normalization applied to the values, or None
    when the samples are in raw units.
    """

    inputs: np.ndarray
    targets: np.ndarray
    spec: SliceSpec
    norm: Optional[NormParams] = None

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("inputs and targets must be 2-D")
        if x.shape[0] != y.shape[0] or x.shape[0] < 1:
            raise ValueError(
                f"inputs ({x.shape}) and targets ({y.shape}) must share a "
                "first dimension N >= 1"
            )
        if x.shape[1] != self.spec.window or y.shape[1] != self.spec.interval:
            raise ValueError(
                f"sample shapes {x.shape[1]}/{y.shape[1]} do not match "
                f"spec window/interval {self.spec.window}/{self.spec.interval}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericError("windowed dataset contains non-finite values")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])


def pressure_to_height(
    series: TimeSeries, rho: float = RHO_SEAWATER, g: float = G_STANDARD
) -> TimeSeries:
    """Convert a pressure signal (mbar) to water-column height (meters).

    Hydrostatic relation: h = p_pascal / (rho * g), with 1 mbar = 100 Pa.
    """
    if series.unit != "mbar":
        raise UnitMismatchError(f"expected unit 'mbar', got {series.unit!r}")
    if not (rho > 0 and g > 0):
        raise ValueError(f"rho and g must be positive, got rho={rho}, g={g}")
    h = series.values * (100.0 / (rho * g))
    if not np.all(np.isfinite(h)):
        raise NumericError("hydrostatic conversion produced non-finite values")
    return TimeSeries(values=h, dt=series.dt, unit="meter", t0=series.t0)


def fit_minmax(series: TimeSeries) -> NormParams:
    """Fit min-max scaling constants on a series (typically the train split)."""
    lo = float(np.min(series.values))
    hi = float(np.max(series.values))
    if hi == lo:
        raise DegenerateRangeError(
            f"constant signal (min == max == {lo}); cannot normalize"
        )
    return NormParams(min=lo, max=hi)


def normalize(series: TimeSeries, norm: NormParams) -> TimeSeries:
    """Map values through x' = (x - min) / (max - min). No clamping."""
    scaled = (series.values - norm.min) / norm.range
    return TimeSeries(values=scaled, dt=series.dt, unit="normalized", t0=series.t0)


def denormalize(series: TimeSeries, norm: NormParams, unit: str = "meter") -> TimeSeries:
    """Exact inverse of :func:`normalize`, restoring the given unit tag."""
    raw = norm.min + series.values * norm.range
    return TimeSeries(values=raw, dt=series.dt, unit=unit, t0=series.t0)


def chrono_split(
    series: TimeSeries, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Split into contiguous, ordered train/validation/test segments.

    Segment lengths are floor(f * L) with the remainder assigned to the last
    (test) segment.
    """
    f_train, f_val, f_test = fractions
    if min(f_train, f_val, f_test) <= 0:
        raise ValueError(f"fractions must be positive, got {fractions}")
    if abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    L = len(series)
    n_train = int(np.floor(f_train * L))
    n_val = int(np.floor(f_val * L))
    bounds = (n_train, n_train + n_val)

    def segment(lo: int, hi: int) -> TimeSeries:
        t0 = None if series.t0 is None else series.t0 + lo * series.dt
        return TimeSeries(
            values=series.values[lo:hi], dt=series.dt, unit=series.unit, t0=t0
        )

    return segment(0, bounds[0]), segment(bounds[0], bounds[1]), segment(bounds[1], L)


def slice_windows(
    series: TimeSeries, spec: SliceSpec, norm: Optional[NormParams] = None
) -> WindowedDataset:
    """Slice a series into supervised samples.

    Sample i uses indices [i*step, i*step + window) as input and the next
    ``interval`` indices as target; N = floor((L - window - interval) / step) + 1.
    """
    L = len(series)
    w, m, s = spec.window, spec.interval, spec.step
    if L < w + m:
        raise InsufficientDataError(L, w, m)
    n = (L - w - m) // s + 1
    starts = np.arange(n) * s
    # Two strided gathers; source is small enough that fancy indexing is fine.
    inputs = series.values[starts[:, None] + np.arange(w)[None, :]]
    targets = series.values[starts[:, None] + w + np.arange(m)[None, :]]
    return WindowedDataset(inputs=inputs, targets=targets, spec=spec, norm=norm)


def read_series_csv(path: str, dt: float, unit: str = "dimensionless") -> TimeSeries:
    """Read a ``timestamp,value`` CSV (timestamp column optional).

    The header decides the layout: with both columns, the first timestamp is
    kept as t0 when it parses as a float; with a single ``value`` column the
    row index stands in for time. ``dt`` always comes from the caller.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        cols = [c.strip().lower() for c in header]
        if cols == ["timestamp", "value"]:
            t0 = None
            values = []
            for row_idx, row in enumerate(reader):
                if not row:
                    continue
                if row_idx == 0:
                    try:
                        t0 = float(row[0])
                    except ValueError:
                        t0 = None
                values.append(float(row[1]))
        elif cols == ["value"]:
            t0 = None
            values = [float(row[0]) for row in reader if row]
        else:
            raise ValueError(
                f"{path}: expected header 'timestamp,value' or 'value', got {header}"
            )
    if not values:
        raise ValueError(f"{path}: no data rows")
    return TimeSeries(values=np.array(values), dt=dt, unit=unit, t0=t0)


def write_series_csv(series: TimeSeries, path: str) -> None:
    """Write the ``timestamp,value`` CSV the reader ingests (round-trip safe)."""
    t0 = 0.0 if series.t0 is None else series.t0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "value"])
        for idx, v in enumerate(series.values):
            writer.writerow([repr(t0 + idx * series.dt), repr(float(v))])


def export_windows_csv(dataset: WindowedDataset, path: str) -> None:
    """Dump one sample per row, input columns then target columns (debugging)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        w, m = dataset.spec.window, dataset.spec.interval
        writer.writerow([f"x{i}" for i in range(w)] + [f"y{j}" for j in range(m)])
        for xi, yi in zip(dataset.inputs, dataset.targets):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in yi])
