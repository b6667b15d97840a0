"""Probabilistic multi-step wave-height forecasting toolkit.

LSTM deep ensembles with Gaussian outputs, mixture aggregation, reliability
evaluation, and post-hoc STD-scaling calibration, plus a synthetic wave
generator and a CLI wiring the full pipeline.
"""

from .calibrate import CalibrationReport, apply_scale, calibrate_ensemble, fit_std_scale
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .ensemble import (
    DeepEnsemble,
    ProbForecast,
    aggregate,
    predict,
    predict_batch,
    train_ensemble,
)
from .lstm import HeadParams, LstmParams, backward, cell_step, forward, init_params
from .metrics import ReliabilityCurve, auce, mape, normal_quantile, r2, reliability, rmse
from .series import (
    NormParams,
    SliceSpec,
    TimeSeries,
    WindowedDataset,
    chrono_split,
    denormalize,
    fit_minmax,
    normalize,
    pressure_to_height,
    slice_windows,
)
from .synth import WaveSpec, default_training_spec, generate
from .train import TrainConfig, TrainReport, adam_step, nll, train_member

__version__ = "0.1.0"

__all__ = [
    "CalibrationReport",
    "DeepEnsemble",
    "HeadParams",
    "LstmParams",
    "NormParams",
    "ProbForecast",
    "ReliabilityCurve",
    "RunConfig",
    "SliceSpec",
    "TimeSeries",
    "TrainConfig",
    "TrainReport",
    "WaveSpec",
    "WindowedDataset",
    "adam_step",
    "aggregate",
    "apply_scale",
    "auce",
    "backward",
    "calibrate_ensemble",
    "cell_step",
    "chrono_split",
    "default_training_spec",
    "denormalize",
    "fit_minmax",
    "fit_std_scale",
    "forward",
    "generate",
    "init_params",
    "load_checkpoint",
    "mape",
    "nll",
    "normal_quantile",
    "normalize",
    "predict",
    "predict_batch",
    "pressure_to_height",
    "r2",
    "reliability",
    "rmse",
    "save_checkpoint",
    "slice_windows",
    "train_ensemble",
    "train_member",
]
