"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The benchmark fixture
trains the 5-member ensemble once (a few minutes on one CPU core) and is
shared by the criteria that need a trained model.
"""

import json
import math
import time

import numpy as np
import pytest

from wavecast.calibrate import DEFAULT_GRID, fit_std_scale
from wavecast.cli import main
from wavecast.config import RunConfig
from wavecast.ensemble import aggregate, predict_batch, train_ensemble
from wavecast.errors import InsufficientDataError
from wavecast.lstm import backward, forward, init_params, param_dict, params_from_dict
from wavecast.metrics import auce, r2, reliability
from wavecast.pipeline import eval_dataset, training_datasets
from wavecast.series import SliceSpec, TimeSeries, slice_windows
from wavecast.synth import default_training_spec, generate
from wavecast.train import nll, nll_batch_with_grads

BENCH_CONFIG = RunConfig(
    hidden=32, window=100, interval=20, step=10, models=5,
    epochs=110, patience=110, batch_size=128, seed=0,
)
TRAIN_BUDGET_SECONDS = 900.0


def check(criterion: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def benchmark():
    """5-member ensemble on the default composite wave (w=100, m=20, H=32)."""
    spec = default_training_spec(seed=42)
    assert spec.dt == 0.05 and spec.noise_std == 0.02
    series = generate(spec)
    cfg = BENCH_CONFIG
    started = time.perf_counter()
    train_ds, val_ds, _ = training_datasets(series, cfg)
    ensemble, _reports = train_ensemble(
        train_ds, val_ds, cfg.arch, cfg.train_config(),
        n_members=cfg.models, base_seed=cfg.seed, unit="meter",
    )
    train_seconds = time.perf_counter() - started
    test_ds = eval_dataset(series, cfg, split="test")
    val_raw = eval_dataset(series, cfg, split="val")
    mu, var = predict_batch(ensemble, test_ds.inputs)
    return {
        "series": series,
        "config": cfg,
        "ensemble": ensemble,
        "test_ds": test_ds,
        "val_raw": val_raw,
        "mu": mu,
        "var": var,
        "train_seconds": train_seconds,
    }


def test_criterion_1_gradient_correctness():
    rng = np.random.default_rng(2024)
    eps = 1e-5
    started = time.perf_counter()
    checked = 0
    for trial in range(100):
        H = int(rng.integers(1, 9))
        l = int(rng.integers(1, 17))
        m = int(rng.integers(1, 9))
        params, heads = init_params(H, l, m, seed=1000 + trial)
        x = rng.normal(size=l)
        y = rng.normal(size=m)
        tr = forward(params, heads, x)
        _, dmu, dvar = nll_batch_with_grads(tr.mu[None], tr.var[None], y[None])
        analytic = backward(tr, params, heads, dmu[0], dvar[0])
        values = param_dict(params, heads)
        for key, arr in values.items():
            flat = arr.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + eps
                tp = forward(*params_from_dict(values), x)
                lp = nll(tp.mu, tp.var, y)
                flat[j] = orig - eps
                tm = forward(*params_from_dict(values), x)
                lm = nll(tm.mu, tm.var, y)
                flat[j] = orig
                fd = (lp - lm) / (2.0 * eps)
                a = analytic[key].ravel()[j]
                assert abs(a - fd) <= 1e-4 * max(abs(a), abs(fd), 1e-4), (
                    f"trial {trial} {key}[{j}]: analytic {a} vs fd {fd}"
                )
                checked += 1
    elapsed = time.perf_counter() - started
    check(
        "criterion 1 (gradient correctness)",
        elapsed < 60.0,
        f"{checked} entries over 100 random instances matched central "
        f"differences at 1e-4 in {elapsed:.1f}s",
    )


def test_criterion_2_aggregation_oracle():
    out = aggregate(np.array([[1.0], [3.0]]), np.array([[1.0], [1.0]]))
    assert out.mu[0] == 2.0 and out.var[0] == 2.0

    rng = np.random.default_rng(77)
    n = 1_000_000
    for case in range(20):
        M = int(rng.integers(2, 8))
        mus = rng.normal(scale=2.0, size=(M, 1))
        vars_ = rng.uniform(0.1, 3.0, size=(M, 1))
        agg = aggregate(mus, vars_)
        comp = rng.integers(0, M, size=n)
        draws = rng.normal(mus[comp, 0], np.sqrt(vars_[comp, 0]))
        emp_mean = draws.mean()
        emp_var = draws.var()
        se_mean = draws.std() / math.sqrt(n)
        m4 = np.mean((draws - emp_mean) ** 4)
        se_var = math.sqrt(max(m4 - emp_var**2, 0.0) / n)
        assert abs(emp_mean - agg.mu[0]) <= 3.0 * se_mean, f"case {case} mean"
        assert abs(emp_var - agg.var[0]) <= 3.0 * se_var, f"case {case} variance"
    check(
        "criterion 2 (aggregation oracle)",
        True,
        "hand mixture case exact; 20 Monte-Carlo cases within 3 SE at 1e6 draws",
    )


def test_criterion_3_calibration_math():
    s, _ = fit_std_scale(np.zeros(2), np.ones(2), np.array([1.0, 3.0]))
    assert abs(s - math.sqrt(5.0)) <= 1e-12

    rng = np.random.default_rng(31)
    log_step = math.log(DEFAULT_GRID[1] / DEFAULT_GRID[0])
    for _ in range(20):
        nn = int(rng.integers(50, 400))
        mu = rng.normal(size=nn)
        var = rng.uniform(0.2, 3.0, size=nn)
        y = rng.normal(mu, rng.uniform(0.4, 2.5) * np.sqrt(var))
        s_cf, _ = fit_std_scale(mu, var, y, method="closed_form")
        s_gs, _ = fit_std_scale(mu, var, y, method="grid_search")
        assert abs(math.log(s_gs) - math.log(s_cf)) <= log_step + 1e-12
        for s_fit in (s_cf, s_gs):
            assert nll(mu, var * s_fit**2, y) <= nll(mu, var, y) + 1e-12
    check(
        "criterion 3 (calibration math)",
        True,
        "closed form hits sqrt(5) at 1e-12, agrees with grid argmin within "
        "one step, and never increases fitting-set NLL",
    )


def test_criterion_4_coverage_sanity(benchmark):
    series, cfg = benchmark["series"], benchmark["config"]
    ensemble = benchmark["ensemble"]
    dense = eval_dataset(series, cfg, split="test", step=2)
    mu, var = predict_batch(ensemble, dense.inputs)
    n = mu.size
    assert n >= 10_000
    rng = np.random.default_rng(123)
    y = rng.normal(mu, np.sqrt(var))
    score = auce(reliability(mu.ravel(), var.ravel(), y.ravel()))
    check(
        "criterion 4 (coverage sanity)",
        score < 0.02,
        f"AUCE {score:.5f} over 99 levels for self-consistent draws, n={n}",
    )


def test_criterion_5_benchmark_accuracy(benchmark):
    score = r2(benchmark["test_ds"].targets.ravel(), benchmark["mu"].ravel())
    seconds = benchmark["train_seconds"]
    check(
        "criterion 5 (benchmark accuracy)",
        score > 0.9 and seconds < TRAIN_BUDGET_SECONDS,
        f"pooled test R2 {score:.4f} (> 0.9) with M=5, w=100, m=20, H=32 "
        f"trained in {seconds:.0f}s (< {TRAIN_BUDGET_SECONDS:.0f}s)",
    )


def test_criterion_6_calibration_effectiveness(benchmark):
    ensemble = benchmark["ensemble"]
    val_raw = benchmark["val_raw"]
    mu_t, var_t = benchmark["mu"], benchmark["var"]
    y_t = benchmark["test_ds"].targets

    # Deliberate overconfidence: quarter the predictive variance.
    mu_v, var_v = predict_batch(ensemble, val_raw.inputs)
    s_fit, _ = fit_std_scale(mu_v, var_v * 0.25, val_raw.targets)
    before = auce(reliability(mu_t.ravel(), var_t.ravel() * 0.25, y_t.ravel()))
    after = auce(
        reliability(mu_t.ravel(), var_t.ravel() * 0.25 * s_fit**2, y_t.ravel())
    )
    reduction = (before - after) / before

    # Direction taxonomy on constructed cases: too-wide sigma needs s < 1,
    # too-narrow sigma needs s > 1.
    rng = np.random.default_rng(9)
    resid = rng.normal(size=20_000)
    s_under, _ = fit_std_scale(np.zeros(20_000), np.full(20_000, 4.0), resid)
    s_over, _ = fit_std_scale(np.zeros(20_000), np.full(20_000, 0.25), resid)

    check(
        "criterion 6 (calibration effectiveness)",
        reduction >= 0.30 and s_fit > 1.0 and s_under < 1.0 < s_over,
        f"var x0.25 miscalibration: fitted s {s_fit:.3f} (> 1), test AUCE "
        f"{before:.4f} -> {after:.4f} ({reduction * 100:.1f}% cut, >= 30%); "
        f"direction s_under {s_under:.2f} < 1 < s_over {s_over:.2f}",
    )


def test_criterion_7_trend_reproduction(benchmark):
    y = benchmark["test_ds"].targets
    mu = benchmark["mu"]
    early = r2(y[:, 9], mu[:, 9])
    late = r2(y[:, -1], mu[:, -1])
    check(
        "criterion 7 (trend reproduction)",
        early > late,
        f"per-index R2 at step 10 ({early:.4f}) exceeds final step ({late:.4f})",
    )


def test_criterion_8_determinism(tmp_path):
    data = tmp_path / "wave.csv"
    assert main(["synth", "--preset", "regular", "--seed", "6",
                 "--duration", "90", "--out", str(data)]) == 0
    flags = ["--window", "40", "--interval", "10", "--step", "15",
             "--hidden", "8", "--models", "2", "--epochs", "12",
             "--patience", "12", "--seed", "21"]
    outputs = []
    for run in ("one", "two"):
        ckpt = tmp_path / f"{run}.ckpt.json"
        metrics = tmp_path / f"{run}.metrics.json"
        assert main(["train", str(data), "--out", str(ckpt), *flags]) == 0
        assert main(["evaluate", str(ckpt), str(data), *flags,
                     "--metrics-out", str(metrics)]) == 0
        outputs.append((ckpt.read_bytes(), metrics.read_bytes()))
    check(
        "criterion 8 (determinism)",
        outputs[0] == outputs[1],
        "two identically seeded runs produced byte-identical checkpoints "
        "and metric reports",
    )


def test_criterion_9_slicing_oracle():
    rng = np.random.default_rng(404)
    trials = 0
    while trials < 200:
        L = int(rng.integers(2, 400))
        w = int(rng.integers(1, 30))
        m = int(rng.integers(1, 15))
        s = int(rng.integers(1, 20))
        values = rng.normal(size=L)
        expected = []
        start = 0
        while start + w + m <= L:
            expected.append(
                (values[start : start + w], values[start + w : start + w + m])
            )
            start += s
        series = TimeSeries(values=values, dt=0.05)
        spec = SliceSpec(window=w, interval=m, step=s)
        if not expected:
            with pytest.raises(InsufficientDataError):
                slice_windows(series, spec)
        else:
            ds = slice_windows(series, spec)
            assert len(ds) == len(expected), (L, w, m, s)
            for row, (xi, yi) in enumerate(expected):
                np.testing.assert_array_equal(ds.inputs[row], xi)
                np.testing.assert_array_equal(ds.targets[row], yi)
        trials += 1
    check(
        "criterion 9 (slicing oracle)",
        True,
        "sample counts and contents matched brute-force enumeration on "
        "200 randomized (L, w, m, s) tuples",
    )
