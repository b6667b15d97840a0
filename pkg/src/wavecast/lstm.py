"""Single-layer LSTM with dual mean/variance output heads.

The recurrence follows the classic gate equations: forget/input/output gates
are logistic over the concatenated [h_prev, x_t], the candidate is tanh, the
cell state mixes candidate and carry, and h_t = o * tanh(c_t). The full
hidden-state sequence is concatenated into one vector z = [h_1 ... h_l] and
fed to two parallel affine heads: one for the per-step mean, one for the
per-step variance (made positive by softplus plus a small floor).

Everything is double precision. The batched forward/backward used by the
training loop and the single-sample functions share the same math; tests pin
them against each other and against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NumericError, ShapeMismatchError

VARIANCE_FLOOR = 1e-6

PARAM_KEYS = (
    "w_f", "w_i", "w_c", "w_o",
    "b_f", "b_i", "b_c", "b_o",
    "W_mu", "b_mu", "W_s", "b_s",
)


def sigmoid(u: np.ndarray) -> np.ndarray:
    """Logistic function; IEEE overflow of exp(-u) saturates to 0 correctly."""
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-u))


def softplus(u: np.ndarray) -> np.ndarray:
    """log(1 + exp(u)) without overflow for large |u|."""
    return np.where(u > 0, u, 0.0) + np.log1p(np.exp(-np.abs(u)))


@dataclass(frozen=True)
class LstmParams:
    """Gate weights over [h_prev, x_t] (input width 1) and gate biases."""

    H: int
    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        if self.H < 1:
            raise ValueError("hidden size must be >= 1")
        for name in ("w_f", "w_i", "w_c", "w_o"):
            w = getattr(self, name)
            if w.shape != (self.H, self.H + 1):
                raise ShapeMismatchError(
                    f"{name} has shape {w.shape}, expected {(self.H, self.H + 1)}"
                )
        for name in ("b_f", "b_i", "b_c", "b_o"):
            b = getattr(self, name)
            if b.shape != (self.H,):
                raise ShapeMismatchError(f"{name} has shape {b.shape}, expected ({self.H},)")


@dataclass(frozen=True)
class HeadParams:
    """Two parallel affine heads mapping z = [h_1 ... h_l] to mean and variance."""

    W_mu: np.ndarray
    b_mu: np.ndarray
    W_s: np.ndarray
    b_s: np.ndarray

    def __post_init__(self):
        m, zdim = self.W_mu.shape
        if m < 1 or zdim < 1:
            raise ValueError("head dimensions must be >= 1")
        if self.W_s.shape != (m, zdim):
            raise ShapeMismatchError("W_s shape differs from W_mu")
        if self.b_mu.shape != (m,) or self.b_s.shape != (m,):
            raise ShapeMismatchError("head bias shapes do not match output size")

    @property
    def out_dim(self) -> int:
        return int(self.W_mu.shape[0])

    @property
    def z_dim(self) -> int:
        return int(self.W_mu.shape[1])


class Gates(NamedTuple):
    f: np.ndarray
    i: np.ndarray
    candidate: np.ndarray
    o: np.ndarray


@dataclass(frozen=True)
class ForwardTrace:
    """Activations of one sequence pass, kept for backpropagation.

    Per-timestep arrays have shape (l, H); ``z`` is the concatenated hidden
    sequence of length l*H; ``mu``/``var`` are the head outputs (length m).
    """

    x: np.ndarray
    f: np.ndarray
    i: np.ndarray
    candidate: np.ndarray
    c: np.ndarray
    o: np.ndarray
    h: np.ndarray
    tanh_c: np.ndarray
    z: np.ndarray
    s_pre: np.ndarray
    mu: np.ndarray
    var: np.ndarray


@dataclass(frozen=True)
class BatchTrace:
    """Same as ForwardTrace but with a batch axis: (l, B, H) and (B, ...)."""

    x: np.ndarray
    f: np.ndarray
    i: np.ndarray
    candidate: np.ndarray
    c: np.ndarray
    o: np.ndarray
    h: np.ndarray
    tanh_c: np.ndarray
    z: np.ndarray
    s_pre: np.ndarray
    mu: np.ndarray
    var: np.ndarray


def init_params(H: int, l: int, m: int, seed: int) -> tuple[LstmParams, HeadParams]:
    """Seeded uniform [-1/sqrt(H), +1/sqrt(H)] weights, forget bias +1.

    The draw order is fixed (gates f,i,c,o then heads mu,s) so a seed fully
    determines every entry.
    """
    if min(H, l, m) < 1:
        raise ValueError(f"H, l, m must all be >= 1, got {(H, l, m)}")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(H)

    def draw(*shape):
        return rng.uniform(-scale, scale, size=shape)

    params = LstmParams(
        H=H,
        w_f=draw(H, H + 1),
        w_i=draw(H, H + 1),
        w_c=draw(H, H + 1),
        w_o=draw(H, H + 1),
        b_f=np.ones(H),
        b_i=np.zeros(H),
        b_c=np.zeros(H),
        b_o=np.zeros(H),
    )
    heads = HeadParams(
        W_mu=draw(m, l * H),
        b_mu=np.zeros(m),
        W_s=draw(m, l * H),
        b_s=np.zeros(m),
    )
    return params, heads


def cell_step(
    params: LstmParams, x_t: float, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray, Gates]:
    """One LSTM cell update for a scalar input."""
    inp = np.append(h_prev, x_t)
    f = sigmoid(params.w_f @ inp + params.b_f)
    i = sigmoid(params.w_i @ inp + params.b_i)
    g = np.tanh(params.w_c @ inp + params.b_c)
    o = sigmoid(params.w_o @ inp + params.b_o)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, Gates(f=f, i=i, candidate=g, o=o)


def _stacked_gate_weights(params: LstmParams) -> tuple[np.ndarray, np.ndarray]:
    # Sigmoid gates first (f, i, o) then the tanh candidate, so the forward
    # pass can apply each nonlinearity to one contiguous block.
    W = np.concatenate([params.w_f, params.w_i, params.w_o, params.w_c], axis=0)
    b = np.concatenate([params.b_f, params.b_i, params.b_o, params.b_c])
    return W, b


def forward_batch(
    params: LstmParams,
    heads: HeadParams,
    X: np.ndarray,
    var_floor: float = VARIANCE_FLOOR,
) -> BatchTrace:
    """Run the network over a batch of input windows, shape (B, l)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatchError(f"expected (B, l) inputs, got shape {X.shape}")
    B, l = X.shape
    H = params.H
    if heads.z_dim != l * H:
        raise ShapeMismatchError(
            f"heads expect z of length {heads.z_dim}, forward produces {l * H}"
        )
    W, b = _stacked_gate_weights(params)
    Wh_T = np.ascontiguousarray(W[:, :H].T)
    # Input contributions for every timestep at once (input width is 1).
    pre_x = X[:, :, None] * W[:, H] + b

    f = np.empty((l, B, H))
    i = np.empty((l, B, H))
    g = np.empty((l, B, H))
    o = np.empty((l, B, H))
    c = np.empty((l, B, H))
    tc = np.empty((l, B, H))
    h = np.empty((l, B, H))

    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(l):
        pre = h_prev @ Wh_T
        pre += pre_x[:, t]
        gates = sigmoid(pre[:, : 3 * H])
        f[t] = gates[:, :H]
        i[t] = gates[:, H : 2 * H]
        o[t] = gates[:, 2 * H :]
        g[t] = np.tanh(pre[:, 3 * H :])
        c[t] = f[t] * c_prev + i[t] * g[t]
        tc[t] = np.tanh(c[t])
        h[t] = o[t] * tc[t]
        h_prev = h[t]
        c_prev = c[t]

    z = np.moveaxis(h, 0, 1).reshape(B, l * H)
    mu = z @ heads.W_mu.T + heads.b_mu
    s_pre = z @ heads.W_s.T + heads.b_s
    var = softplus(s_pre) + var_floor

    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(var))):
        raise NumericError("non-finite activation in batched forward pass")
    return BatchTrace(
        x=X, f=f, i=i, candidate=g, c=c, o=o, h=h, tanh_c=tc,
        z=z, s_pre=s_pre, mu=mu, var=var,
    )


def forward(
    params: LstmParams,
    heads: HeadParams,
    x: np.ndarray,
    var_floor: float = VARIANCE_FLOOR,
) -> ForwardTrace:
    """Run the network over one input window of length l (h_0 = c_0 = 0)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ShapeMismatchError(f"expected a 1-D window, got shape {x.shape}")
    try:
        bt = forward_batch(params, heads, x[None, :], var_floor=var_floor)
    except NumericError:
        # Re-run stepwise to name the offending timestep.
        h_prev = np.zeros(params.H)
        c_prev = np.zeros(params.H)
        for t, x_t in enumerate(x):
            h_prev, c_prev, _ = cell_step(params, float(x_t), h_prev, c_prev)
            if not (np.all(np.isfinite(h_prev)) and np.all(np.isfinite(c_prev))):
                raise NumericError(f"non-finite activation at timestep {t}") from None
        raise NumericError("non-finite head output") from None
    return ForwardTrace(
        x=x,
        f=bt.f[:, 0], i=bt.i[:, 0], candidate=bt.candidate[:, 0],
        c=bt.c[:, 0], o=bt.o[:, 0], h=bt.h[:, 0], tanh_c=bt.tanh_c[:, 0],
        z=bt.z[0], s_pre=bt.s_pre[0], mu=bt.mu[0], var=bt.var[0],
    )


def backward_batch(
    trace: BatchTrace,
    params: LstmParams,
    heads: HeadParams,
    dmu: np.ndarray,
    dvar: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss, summed over the batch.

    ``dmu``/``dvar`` are dL/dmu and dL/dvar, shape (B, m). Returns a dict
    keyed by PARAM_KEYS.
    """
    l, B, H = trace.h.shape
    dmu = np.asarray(dmu, dtype=np.float64)
    dvar = np.asarray(dvar, dtype=np.float64)
    if dmu.shape != trace.mu.shape or dvar.shape != trace.var.shape:
        raise ShapeMismatchError("loss gradient shapes do not match trace outputs")

    # Heads: var = softplus(s_pre) + floor, d softplus = sigmoid.
    ds_pre = dvar * sigmoid(trace.s_pre)
    grads = {
        "W_mu": dmu.T @ trace.z,
        "b_mu": dmu.sum(axis=0),
        "W_s": ds_pre.T @ trace.z,
        "b_s": ds_pre.sum(axis=0),
    }
    dz = dmu @ heads.W_mu + ds_pre @ heads.W_s
    dh_seq = np.moveaxis(dz.reshape(B, l, H), 1, 0)

    W, _ = _stacked_gate_weights(params)
    Wh = np.ascontiguousarray(W[:, :H])
    dWh = np.zeros((4 * H, H))
    dwx = np.zeros(4 * H)
    db = np.zeros(4 * H)
    dh_carry = np.zeros((B, H))
    dc_carry = np.zeros((B, H))
    X = trace.x
    zeros = np.zeros((B, H))

    for t in range(l - 1, -1, -1):
        f, i, g, o = trace.f[t], trace.i[t], trace.candidate[t], trace.o[t]
        tc = trace.tanh_c[t]
        c_prev = trace.c[t - 1] if t > 0 else zeros
        h_prev = trace.h[t - 1] if t > 0 else zeros

        dh = dh_seq[t] + dh_carry
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        # Pre-activation gradients in the stacked (f, i, o, candidate) order.
        dpre = np.concatenate(
            [
                dc * c_prev * f * (1.0 - f),
                dc * g * i * (1.0 - i),
                dh * tc * o * (1.0 - o),
                dc * i * (1.0 - g * g),
            ],
            axis=1,
        )
        dWh += dpre.T @ h_prev
        dwx += dpre.T @ X[:, t]
        db += dpre.sum(axis=0)
        dh_carry = dpre @ Wh
        dc_carry = dc * f

    dW = np.concatenate([dWh, dwx[:, None]], axis=1)

    grads["w_f"], grads["w_i"], grads["w_o"], grads["w_c"] = (
        dW[:H], dW[H : 2 * H], dW[2 * H : 3 * H], dW[3 * H :]
    )
    grads["b_f"], grads["b_i"], grads["b_o"], grads["b_c"] = (
        db[:H], db[H : 2 * H], db[2 * H : 3 * H], db[3 * H :]
    )
    return grads


def backward(
    trace: ForwardTrace,
    params: LstmParams,
    heads: HeadParams,
    dmu: np.ndarray,
    dvar: np.ndarray,
) -> dict[str, np.ndarray]:
    """Single-sample backpropagation through time (batch of one)."""
    bt = BatchTrace(
        x=trace.x[None, :],
        f=trace.f[:, None], i=trace.i[:, None], candidate=trace.candidate[:, None],
        c=trace.c[:, None], o=trace.o[:, None], h=trace.h[:, None],
        tanh_c=trace.tanh_c[:, None],
        z=trace.z[None, :], s_pre=trace.s_pre[None, :],
        mu=trace.mu[None, :], var=trace.var[None, :],
    )
    dmu = np.asarray(dmu, dtype=np.float64)
    dvar = np.asarray(dvar, dtype=np.float64)
    return backward_batch(bt, params, heads, dmu[None, :], dvar[None, :])


def param_dict(params: LstmParams, heads: HeadParams) -> dict[str, np.ndarray]:
    """Flatten both parameter sets into one name -> array mapping."""
    d = {k: getattr(params, k) for k in PARAM_KEYS[:8]}
    d.update({k: getattr(heads, k) for k in PARAM_KEYS[8:]})
    return d


def params_from_dict(d: dict[str, np.ndarray]) -> tuple[LstmParams, HeadParams]:
    H = d["w_f"].shape[0]
    params = LstmParams(H=H, **{k: d[k] for k in PARAM_KEYS[:8]})
    heads = HeadParams(**{k: d[k] for k in PARAM_KEYS[8:]})
    return params, heads
