import numpy as np
import pytest

from wavecast.config import RunConfig
from wavecast.ensemble import train_ensemble
from wavecast.pipeline import eval_dataset, training_datasets
from wavecast.synth import WaveSpec, generate

TINY_CONFIG = RunConfig(
    hidden=8,
    window=40,
    interval=10,
    step=10,
    models=2,
    epochs=25,
    patience=25,
    batch_size=64,
    seed=3,
)


def tiny_wave(seed: int = 5) -> WaveSpec:
    return WaveSpec(
        kind="regular",
        components=((1.0, 8.0, 0.3),),
        noise_std=0.01,
        dt=0.05,
        duration=120.0,
        seed=seed,
    )


@pytest.fixture(scope="session")
def tiny_series():
    return generate(tiny_wave())


@pytest.fixture(scope="session")
def tiny_ensemble(tiny_series):
    """A small trained 2-member ensemble shared by serialization/CLI tests."""
    cfg = TINY_CONFIG
    train_ds, val_ds, _ = training_datasets(tiny_series, cfg)
    ensemble, reports = train_ensemble(
        train_ds,
        val_ds,
        cfg.arch,
        cfg.train_config(),
        n_members=cfg.models,
        base_seed=cfg.seed,
        unit="meter",
    )
    return ensemble, reports


@pytest.fixture(scope="session")
def tiny_test_data(tiny_series):
    return eval_dataset(tiny_series, TINY_CONFIG, split="test")


@pytest.fixture(scope="session")
def tiny_val_data(tiny_series):
    return eval_dataset(tiny_series, TINY_CONFIG, split="val")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
