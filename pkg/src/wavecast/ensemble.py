"""Deep ensemble: M independently seeded members aggregated as a mixture.

Members share one architecture and training data and differ only in their
random initialization. Per output step the ensemble is an equal-weight
Gaussian mixture; its first two moments give the reported mean and variance:

    mu_hat = mean_i mu_i
    var_hat = mean_i (var_i + mu_i^2) - mu_hat^2

Aggregation happens in normalized units; the result is mapped back to the
physical unit (mean affinely, variance by the squared min-max range).
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import CalibrationMissingError, ShapeMismatchError
from .lstm import HeadParams, LstmParams, forward_batch
from .series import NormParams, WindowedDataset
from .train import TrainConfig, TrainReport, train_member


@dataclass(frozen=True)
class ProbForecast:
    """Per-step Gaussian forecast: mean and variance vectors plus unit tag."""

    mu: np.ndarray
    var: np.ndarray
    unit: str = "normalized"

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        if mu.shape != var.shape or mu.ndim != 1:
            raise ShapeMismatchError(
                f"mu {mu.shape} and var {var.shape} must be equal-length vectors"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(var))):
            raise ValueError("forecast contains non-finite values")
        if np.any(var <= 0):
            raise ValueError("forecast variance must be strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "var", var)


@dataclass
class DeepEnsemble:
    """Trained members plus the normalization and calibration state."""

    members: list
    arch: tuple[int, int, int]
    norm: NormParams
    unit: str = "meter"
    calib: Optional[float] = None
    var_floor: float = 1e-6
    seeds: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("ensemble needs at least one member")
        H = self.arch[0]
        for p, _h in self.members:
            if p.H != H:
                raise ShapeMismatchError("all members must share the architecture")
        if self.calib is not None and not self.calib > 0:
            raise ValueError(f"calibration factor must be positive, got {self.calib}")

    @property
    def size(self) -> int:
        return len(self.members)


def _mixture_moments(
    member_mus: np.ndarray, member_vars: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    mu_hat = member_mus.mean(axis=0)
    spread = (member_mus * member_mus).mean(axis=0) - mu_hat * mu_hat
    # spread >= 0 mathematically; clamp only float cancellation.
    var_hat = member_vars.mean(axis=0) + np.maximum(spread, 0.0)
    return mu_hat, var_hat


def aggregate(
    member_mus: np.ndarray, member_vars: np.ndarray, unit: str = "normalized"
) -> ProbForecast:
    """Collapse (M, m) member outputs into the mixture mean and variance."""
    member_mus = np.asarray(member_mus, dtype=np.float64)
    member_vars = np.asarray(member_vars, dtype=np.float64)
    if member_mus.ndim != 2 or member_mus.shape != member_vars.shape:
        raise ShapeMismatchError(
            f"expected matching (M, m) arrays, got {member_mus.shape} and {member_vars.shape}"
        )
    if member_mus.shape[0] < 1:
        raise ValueError("cannot aggregate an empty ensemble")
    if np.any(member_vars <= 0):
        raise ValueError("member variances must be strictly positive")
    mu_hat, var_hat = _mixture_moments(member_mus, member_vars)
    return ProbForecast(mu=mu_hat, var=var_hat, unit=unit)


def _train_one(args) -> tuple[LstmParams, HeadParams, TrainReport]:
    train_ds, val_ds, arch, config = args
    return train_member(train_ds, val_ds, arch, config)


def train_ensemble(
    train_ds: WindowedDataset,
    val_ds: WindowedDataset,
    arch: tuple[int, int, int],
    config: TrainConfig,
    n_members: int,
    base_seed: int,
    unit: str = "meter",
    jobs: int = 1,
) -> tuple[DeepEnsemble, list[TrainReport]]:
    """Train M members on identical data with seeds base_seed + i.

    Diversity comes from initialization alone (no bagging). With jobs > 1
    members train in separate processes; results are merged in member order
    so the outcome is independent of scheduling.
    """
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    if train_ds.norm is None:
        raise ValueError("training dataset must carry its normalization")
    seeds = tuple(base_seed + i for i in range(n_members))
    tasks = [(train_ds, val_ds, arch, replace(config, seed=s)) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_one, tasks))
    else:
        results = [_train_one(t) for t in tasks]
    members = [(p, h) for p, h, _ in results]
    reports = [r for _, _, r in results]
    ensemble = DeepEnsemble(
        members=members,
        arch=arch,
        norm=train_ds.norm,
        unit=unit,
        var_floor=config.var_floor,
        seeds=seeds,
    )
    return ensemble, reports


def predict_batch(
    ensemble: DeepEnsemble, X_raw: np.ndarray, apply_calibration: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Forecast a batch of raw-unit windows, returning (N, m) mu and var."""
    X_raw = np.asarray(X_raw, dtype=np.float64)
    H, l, m = ensemble.arch
    if X_raw.ndim != 2 or X_raw.shape[1] != l:
        raise ShapeMismatchError(
            f"expected (N, {l}) input windows, got shape {X_raw.shape}"
        )
    if apply_calibration and ensemble.calib is None:
        raise CalibrationMissingError(
            "calibrated prediction requested but no scaling factor is fitted"
        )
    norm = ensemble.norm
    Xn = (X_raw - norm.min) / norm.range

    M = ensemble.size
    n = X_raw.shape[0]
    mus = np.empty((M, n, m))
    vars_ = np.empty((M, n, m))
    for i, (params, heads) in enumerate(ensemble.members):
        bt = forward_batch(params, heads, Xn, var_floor=ensemble.var_floor)
        mus[i] = bt.mu
        vars_[i] = bt.var
    mu_hat, var_hat = _mixture_moments(mus, vars_)

    mu_out = norm.min + norm.range * mu_hat
    var_out = norm.range * norm.range * var_hat
    if apply_calibration:
        var_out = var_out * (ensemble.calib * ensemble.calib)
    return mu_out, var_out


def predict(
    ensemble: DeepEnsemble, x_raw: np.ndarray, apply_calibration: bool = False
) -> ProbForecast:
    """Forecast one raw-unit window of length l."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.ndim != 1:
        raise ShapeMismatchError(f"expected a 1-D window, got shape {x_raw.shape}")
    if x_raw.size != ensemble.arch[1]:
        raise ShapeMismatchError(
            f"window length {x_raw.size} does not match the model's "
            f"expected length {ensemble.arch[1]}"
        )
    mu, var = predict_batch(ensemble, x_raw[None, :], apply_calibration)
    return ProbForecast(mu=mu[0], var=var[0], unit=ensemble.unit)


def write_forecast_csv(forecast: ProbForecast, path: str) -> None:
    """Emit ``step,mu,var,ci95_lo,ci95_hi`` rows (95% central interval)."""
    from .metrics import normal_quantile

    z = normal_quantile(0.975)
    sd = np.sqrt(forecast.var)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mu", "var", "ci95_lo", "ci95_hi"])
        for j in range(forecast.mu.size):
            writer.writerow(
                [
                    j + 1,
                    repr(float(forecast.mu[j])),
                    repr(float(forecast.var[j])),
                    repr(float(forecast.mu[j] - z * sd[j])),
                    repr(float(forecast.mu[j] + z * sd[j])),
                ]
            )
