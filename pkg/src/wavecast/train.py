"""Gaussian NLL objective, Adam, and the per-member training loop.

One member trains on shuffled mini-batches of normalized (window, target)
samples, minimizing the mean negative log-likelihood; after every epoch the
validation NLL is evaluated, and the weights from the best validation epoch
are what the caller gets back (early stopping with patience).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError, TrainingDivergedError
from .lstm import (
    HeadParams,
    LstmParams,
    backward_batch,
    forward_batch,
    init_params,
    param_dict,
    params_from_dict,
)
from .series import WindowedDataset

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3500
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    patience: int = 200
    seed: int = 0
    clip_norm: float = 5.0
    var_floor: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr <= 0 or self.eps_adam <= 0 or self.clip_norm <= 0:
            raise ValueError("lr, eps_adam and clip_norm must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must be in (0, 1)")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.var_floor <= 0:
            raise ValueError("var_floor must be positive")


@dataclass
class TrainReport:
    """Per-epoch loss curves plus where early stopping landed."""

    train_nll: list = field(default_factory=list)
    val_nll: list = field(default_factory=list)
    best_epoch: int = 0
    wall_clock: float = 0.0


def nll(mu: np.ndarray, var: np.ndarray, y: np.ndarray) -> float:
    """Mean Gaussian negative log-likelihood over the output steps.

    Per step: log(var)/2 + (y - mu)^2 / (2 var) + log(2 pi)/2.
    """
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (mu.shape == var.shape == y.shape):
        raise ShapeMismatchError(
            f"nll shapes differ: mu {mu.shape}, var {var.shape}, y {y.shape}"
        )
    if np.any(var <= 0):
        raise ValueError("variance must be strictly positive")
    r = y - mu
    return float(np.mean(0.5 * np.log(var) + r * r / (2.0 * var) + 0.5 * LOG_2PI))


def nll_batch_with_grads(
    mu: np.ndarray, var: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch-mean NLL plus its gradients w.r.t. mu and var.

    The loss is the mean over all (sample, step) entries, so the learning
    rate is insensitive to both batch size and interval length. Overflow is
    tolerated here; the caller checks the loss for finiteness.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        r = y - mu
        elems = 0.5 * np.log(var) + r * r / (2.0 * var) + 0.5 * LOG_2PI
        scale = 1.0 / elems.size
        loss = float(elems.sum() * scale)
        dmu = (mu - y) / var * scale
        dvar = (0.5 / var - r * r / (2.0 * var * var)) * scale
    return loss, dmu, dvar


@dataclass
class AdamState:
    """First/second moment accumulators, keyed like the parameter dict."""

    t: int
    m: dict
    v: dict


def init_adam_state(values: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        t=0,
        m={k: np.zeros_like(v) for k, v in values.items()},
        v={k: np.zeros_like(v) for k, v in values.items()},
    )


def adam_step(
    values: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """Standard bias-corrected Adam update (arrays updated in place)."""
    if set(values) != set(grads):
        raise ShapeMismatchError("gradient keys do not match parameter keys")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for k, g in grads.items():
        if g.shape != values[k].shape:
            raise ShapeMismatchError(f"gradient for {k} has shape {g.shape}")
        m = state.m[k]
        v = state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        values[k] -= config.lr * (m / c1) / (np.sqrt(v / c2) + config.eps_adam)
    return values, state


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients down when their joint L2 norm exceeds max_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


def _mean_nll_over(
    params: LstmParams,
    heads: HeadParams,
    X: np.ndarray,
    Y: np.ndarray,
    var_floor: float,
    chunk: int = 256,
) -> float:
    total = 0.0
    n = X.shape[0]
    for lo in range(0, n, chunk):
        bt = forward_batch(params, heads, X[lo : lo + chunk], var_floor=var_floor)
        yb = Y[lo : lo + chunk]
        r = yb - bt.mu
        elems = 0.5 * np.log(bt.var) + r * r / (2.0 * bt.var) + 0.5 * LOG_2PI
        total += float(elems.mean(axis=1).sum())
    return total / n


def train_member(
    train_ds: WindowedDataset,
    val_ds: WindowedDataset,
    arch: tuple[int, int, int],
    config: TrainConfig,
) -> tuple[LstmParams, HeadParams, TrainReport]:
    """Train one probabilistic network, returning the best-validation weights.

    ``arch`` is (hidden size H, window l, interval m) and must match the
    dataset sample shapes. Shuffling, initialization and therefore the whole
    run are determined by ``config.seed``.
    """
    H, l, m = arch
    if train_ds.spec.window != l or train_ds.spec.interval != m:
        raise ShapeMismatchError(
            f"dataset window/interval {train_ds.spec.window}/{train_ds.spec.interval} "
            f"do not match arch l/m {l}/{m}"
        )
    if len(train_ds) < 1 or len(val_ds) < 1:
        raise ValueError("train and validation datasets must be non-empty")

    started = time.perf_counter()
    params, heads = init_params(H, l, m, config.seed)
    values = param_dict(params, heads)
    state = init_adam_state(values)
    shuffle_rng = np.random.default_rng([config.seed, 1])

    X, Y = train_ds.inputs, train_ds.targets
    n = X.shape[0]
    report = TrainReport()
    best_val = np.inf
    best_values = {k: v.copy() for k, v in values.items()}
    since_best = 0

    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        epoch_sum = 0.0
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            Xb, Yb = X[idx], Y[idx]
            trace = forward_batch(params, heads, Xb, var_floor=config.var_floor)
            loss, dmu, dvar = nll_batch_with_grads(trace.mu, trace.var, Yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            epoch_sum += loss * Xb.shape[0]
            grads = backward_batch(trace, params, heads, dmu, dvar)
            clip_global_norm(grads, config.clip_norm)
            adam_step(values, grads, state, config)
        report.train_nll.append(epoch_sum / n)

        val = _mean_nll_over(
            params, heads, val_ds.inputs, val_ds.targets, config.var_floor
        )
        if not np.isfinite(val):
            raise TrainingDivergedError(epoch, "validation loss")
        report.val_nll.append(val)

        if val < best_val:
            best_val = val
            report.best_epoch = epoch
            best_values = {k: v.copy() for k, v in values.items()}
            since_best = 0
        else:
            since_best += 1
        if since_best >= config.patience:
            break

    report.wall_clock = time.perf_counter() - started
    params, heads = params_from_dict(best_values)
    return params, heads, report
