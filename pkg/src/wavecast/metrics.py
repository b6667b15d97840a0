"""Accuracy metrics (RMSE, MAPE, R2) and uncertainty-quality metrics.

Uncertainty quality is judged by coverage: for each nominal central
confidence level p the observed coverage p_hat is the fraction of targets
inside mu +/- z(p) * sigma. The reliability curve collects (p, p_hat) pairs
over a grid of levels; its mean absolute gap to the diagonal is the
calibration error score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError

# Default grid of confidence levels: 0.01, 0.02, ..., 0.99.
DEFAULT_LEVELS = tuple(k / 100.0 for k in range(1, 100))

MAPE_EPS = 1e-8


def _check_pair(y: np.ndarray, yhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).ravel()
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise ShapeMismatchError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 1:
        raise ValueError("empty inputs")
    return y, yhat


def rmse(y: np.ndarray, yhat: np.ndarray) -> float:
    y, yhat = _check_pair(y, yhat)
    d = y - yhat
    return float(np.sqrt(np.mean(d * d)))


def mape(y: np.ndarray, yhat: np.ndarray, eps: float = MAPE_EPS) -> float:
    """Mean absolute percentage error as a fraction (multiply by 100 for %).

    Raises when any |y| is at or below ``eps``: percentage errors against
    near-zero actuals are unbounded and would silently poison the mean.
    """
    y, yhat = _check_pair(y, yhat)
    if np.any(np.abs(y) <= eps):
        raise ValueError(
            f"MAPE undefined: |y| <= {eps} for at least one sample"
        )
    return float(np.mean(np.abs((y - yhat) / y)))


def r2(y: np.ndarray, yhat: np.ndarray) -> float:
    """Coefficient of determination; negative for worse-than-mean fits."""
    y, yhat = _check_pair(y, yhat)
    if y.size < 2:
        raise ValueError("R2 needs at least two samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R2 undefined for constant targets")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


# Acklam's rational approximation to the standard normal quantile, refined
# by one Halley step against the erfc-based CDF (pushes the error to the
# last few ulps).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(q: float) -> float:
    """Inverse standard normal CDF for q in (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {q}")
    p_low = 0.02425
    if q < p_low:
        u = math.sqrt(-2.0 * math.log(q))
        x = (((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5]) / \
            ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0)
    elif q <= 1.0 - p_low:
        u = q - 0.5
        r = u * u
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5]) / \
            ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0)
    # Halley refinement: e = Phi(x) - q, update x by e / phi(x) corrected
    # for curvature.
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


@dataclass(frozen=True)
class ReliabilityCurve:
    """Nominal levels p (ascending, in (0,1)) and observed coverage p_hat."""

    p: np.ndarray
    p_hat: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        p_hat = np.asarray(self.p_hat, dtype=np.float64)
        if p.shape != p_hat.shape or p.ndim != 1 or p.size < 1:
            raise ShapeMismatchError("p and p_hat must be equal-length vectors")
        if np.any(p <= 0) or np.any(p >= 1) or np.any(np.diff(p) <= 0):
            raise ValueError("levels must be strictly increasing inside (0, 1)")
        if np.any(p_hat < 0) or np.any(p_hat > 1):
            raise ValueError("observed coverage must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_hat", p_hat)


def reliability(
    mu: np.ndarray,
    var: np.ndarray,
    y: np.ndarray,
    levels=DEFAULT_LEVELS,
) -> ReliabilityCurve:
    """Observed coverage of central two-sided intervals at each level.

    For level p the interval is mu +/- z * sigma with z = Phi^-1((1+p)/2);
    p_hat is the fraction of samples whose target falls inside.
    """
    mu = np.asarray(mu, dtype=np.float64).ravel()
    var = np.asarray(var, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if not (mu.shape == var.shape == y.shape):
        raise ShapeMismatchError("mu, var and y must have matching shapes")
    if mu.size < 1:
        raise ValueError("empty inputs")
    if np.any(var <= 0):
        raise ValueError("variance must be strictly positive")
    p = np.asarray(levels, dtype=np.float64)
    sigma = np.sqrt(var)
    absdev = np.abs(y - mu)
    z = np.array([normal_quantile((1.0 + pi) / 2.0) for pi in p])
    p_hat = np.array([np.mean(absdev <= zi * sigma) for zi in z])
    return ReliabilityCurve(p=p, p_hat=p_hat)


def auce(curve: ReliabilityCurve) -> float:
    """Mean absolute gap between the curve and the diagonal."""
    return float(np.mean(np.abs(curve.p_hat - curve.p)))


def per_index_steps(interval: int) -> list[int]:
    """Report rows at multiples of 10 up to the interval, always ending at it."""
    steps = [k for k in range(10, interval + 1, 10)]
    if not steps or steps[-1] != interval:
        steps.append(interval)
    return steps


def evaluation_report(
    mu: np.ndarray,
    var: np.ndarray,
    y: np.ndarray,
    unit: str,
    levels=DEFAULT_LEVELS,
) -> dict:
    """Pooled and per-index metrics for (N, m) predictions against targets.

    MAPE is reported as None when the near-zero-denominator guard trips
    (signals that cross zero have no meaningful percentage error).
    """
    mu = np.asarray(mu, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if mu.ndim != 2 or mu.shape != y.shape or mu.shape != var.shape:
        raise ShapeMismatchError("expected matching (N, m) prediction arrays")

    def block(mu_b, var_b, y_b) -> dict:
        try:
            mape_val = mape(y_b, mu_b)
        except ValueError:
            mape_val = None
        return {
            "rmse": rmse(y_b, mu_b),
            "mape": mape_val,
            "r2": r2(y_b, mu_b),
            "auce": auce(reliability(mu_b, var_b, y_b, levels=levels)),
        }

    report = {"unit": unit, **block(mu, var, y), "per_index": []}
    for step in per_index_steps(mu.shape[1]):
        j = step - 1
        entry = {"index": step, **block(mu[:, j], var[:, j], y[:, j])}
        report["per_index"].append(entry)
    return report


def write_reliability_csv(curve: ReliabilityCurve, path: str) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "p_hat"])
        for pi, phi_ in zip(curve.p, curve.p_hat):
            writer.writerow([repr(float(pi)), repr(float(phi_))])
