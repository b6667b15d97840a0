"""Post-hoc uncertainty calibration by a single STD scaling factor.

A positive scalar s multiplies every predicted standard deviation; it is
fitted on a held-out validation split by minimizing the Gaussian NLL and
never touches the predicted means. The NLL objective in s has a closed-form
stationary point at s^2 = mean((y - mu)^2 / var), which is the default
fitting method; a log-spaced grid search is kept as a compatibility mode.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ensemble import DeepEnsemble, ProbForecast, predict_batch
from .metrics import DEFAULT_LEVELS, auce, reliability
from .series import WindowedDataset
from .train import nll

S_MIN = 1e-3
S_MAX = 1e3

METHODS = ("closed_form", "grid_search")

# 60 log-spaced candidates spanning [0.25, 4].
DEFAULT_GRID = tuple(np.geomspace(0.25, 4.0, 60))


@dataclass(frozen=True)
class CalibrationReport:
    s: float
    auce_before: float
    auce_after: float
    nll_before: float
    nll_after: float
    method: str
    degenerate: bool = False

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("scaling factor must be positive")

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "auce_before": self.auce_before,
            "auce_after": self.auce_after,
            "nll_before": self.nll_before,
            "nll_after": self.nll_after,
            "method": self.method,
            "degenerate": self.degenerate,
        }


def _scaled_nll(mu: np.ndarray, var: np.ndarray, y: np.ndarray, s: float) -> float:
    return nll(mu, var * (s * s), y)


def fit_std_scale(
    mu: np.ndarray,
    var: np.ndarray,
    y: np.ndarray,
    method: str = "closed_form",
    grid=DEFAULT_GRID,
) -> tuple[float, bool]:
    """Fit the scaling factor on held-out predictions.

    Returns (s, degenerate). ``closed_form`` evaluates the NLL stationary
    point directly; ``grid_search`` picks the NLL-minimizing candidate from
    ``grid`` plus the identity s=1. A fit outside [S_MIN, S_MAX] (e.g. zero
    residuals) is clamped and flagged degenerate.
    """
    mu = np.asarray(mu, dtype=np.float64).ravel()
    var = np.asarray(var, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if mu.size < 1 or mu.shape != var.shape or mu.shape != y.shape:
        raise ValueError("mu, var, y must be non-empty and equal-length")
    if np.any(var <= 0):
        raise ValueError("variance must be strictly positive")

    if method == "closed_form":
        r = y - mu
        s = float(np.sqrt(np.mean(r * r / var)))
    elif method == "grid_search":
        candidates = list(grid) + [1.0]
        losses = [_scaled_nll(mu, var, y, c) for c in candidates]
        s = float(candidates[int(np.argmin(losses))])
    else:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")

    degenerate = False
    if not S_MIN <= s <= S_MAX:
        warnings.warn(
            f"degenerate calibration fit s={s:.3g}; clamped to [{S_MIN}, {S_MAX}]",
            stacklevel=2,
        )
        s = float(np.clip(s, S_MIN, S_MAX))
        degenerate = True
    return s, degenerate


def apply_scale(forecast: ProbForecast, s: float) -> ProbForecast:
    """Scale the predictive standard deviation by s (variance by s^2)."""
    if not s > 0:
        raise ValueError(f"scaling factor must be positive, got {s}")
    return ProbForecast(mu=forecast.mu, var=forecast.var * (s * s), unit=forecast.unit)


def calibrate_ensemble(
    ensemble: DeepEnsemble,
    val_ds: WindowedDataset,
    method: str = "closed_form",
    levels=DEFAULT_LEVELS,
) -> CalibrationReport:
    """Fit s on validation predictions and store it on the ensemble.

    ``val_ds`` must be disjoint from both the training and test data. A
    dataset carrying a normalization is mapped back to physical units first
    (the fit itself is scale-invariant, the reported NLL/AUCE are not).
    """
    inputs, targets = val_ds.inputs, val_ds.targets
    if val_ds.norm is not None:
        inputs = val_ds.norm.min + inputs * val_ds.norm.range
        targets = val_ds.norm.min + targets * val_ds.norm.range
    mu, var = predict_batch(ensemble, inputs)

    s, degenerate = fit_std_scale(mu, var, targets, method=method)
    if ensemble.calib is not None:
        warnings.warn(
            f"overwriting previous calibration factor {ensemble.calib:.5g} "
            f"with {s:.5g}",
            stacklevel=2,
        )
    ensemble.calib = s

    mu_f, var_f, y_f = mu.ravel(), var.ravel(), targets.ravel()
    return CalibrationReport(
        s=s,
        auce_before=auce(reliability(mu_f, var_f, y_f, levels=levels)),
        auce_after=auce(reliability(mu_f, var_f * (s * s), y_f, levels=levels)),
        nll_before=nll(mu_f, var_f, y_f),
        nll_after=_scaled_nll(mu_f, var_f, y_f, s),
        method=method,
        degenerate=degenerate,
    )
