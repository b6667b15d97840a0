"""Run configuration: one JSON document holding every tunable default.

Defaults follow the baseline experimental setup: a 5-member ensemble of
single-layer, 70-unit LSTMs, window 300 / interval 70 / step 50 at 20 Hz,
trained up to 3500 epochs with Adam on the NLL loss, 80/10/10 chronological
split, min-max normalization.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .calibrate import METHODS
from .errors import ConfigError
from .metrics import DEFAULT_LEVELS
from .series import G_STANDARD, RHO_SEAWATER, SliceSpec
from .train import TrainConfig


@dataclass(frozen=True)
class RunConfig:
    # architecture
    hidden: int = 70
    window: int = 300
    interval: int = 70
    step: int = 50
    models: int = 5
    # data handling
    dt: float = 0.05
    input_unit: str = "meter"
    split_train: float = 0.8
    split_val: float = 0.1
    split_test: float = 0.1
    rho: float = RHO_SEAWATER
    g: float = G_STANDARD
    # optimization
    epochs: int = 3500
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    patience: int = 200
    clip_norm: float = 5.0
    var_floor: float = 1e-6
    seed: int = 0
    # uncertainty reporting and calibration
    ci_levels: tuple = tuple(DEFAULT_LEVELS)
    calibration_method: str = "closed_form"
    # execution
    jobs: int = 1

    def __post_init__(self):
        # Re-run the module-level validations on the composed pieces.
        self.slice_spec()
        self.train_config()
        if self.models < 1:
            raise ConfigError(f"models must be >= 1, got {self.models}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.calibration_method not in METHODS:
            raise ConfigError(
                f"calibration_method must be one of {METHODS}, "
                f"got {self.calibration_method!r}"
            )
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.rho <= 0 or self.g <= 0:
            raise ConfigError("rho and g must be positive")

    def slice_spec(self) -> SliceSpec:
        return SliceSpec(window=self.window, interval=self.interval, step=self.step)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps_adam=self.eps_adam,
            patience=self.patience,
            seed=self.seed,
            clip_norm=self.clip_norm,
            var_floor=self.var_floor,
        )

    @property
    def arch(self) -> tuple[int, int, int]:
        return (self.hidden, self.window, self.interval)

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.split_train, self.split_val, self.split_test)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["ci_levels"] = list(doc["ci_levels"])
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def config_from_dict(doc: dict) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "ci_levels" in doc:
        doc = {**doc, "ci_levels": tuple(doc["ci_levels"])}
    try:
        return RunConfig(**doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(doc)


def save_config(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(config.to_json())
