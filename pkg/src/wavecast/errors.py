"""Error types shared across the toolkit.

Every error carries a short machine-parseable ``code`` so the CLI can report
failures in a stable, greppable format (``error[<code>]: message``).
"""

from __future__ import annotations


class WavecastError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class UnitMismatchError(WavecastError):
    code = "unit-mismatch"


class DegenerateRangeError(WavecastError):
    """Min-max range collapsed (max == min); the signal cannot be normalized."""

    code = "degenerate-range"


class InsufficientDataError(WavecastError):
    """Series too short to produce a single (window, interval) sample."""

    code = "insufficient-data"

    def __init__(self, length: int, window: int, interval: int):
        self.length = length
        self.window = window
        self.interval = interval
        super().__init__(
            f"series of length {length} cannot fit one window ({window}) "
            f"plus interval ({interval}) sample"
        )


class NumericError(WavecastError):
    """Non-finite value produced where a finite one is required."""

    code = "numeric"


class ShapeMismatchError(WavecastError):
    code = "shape-mismatch"


class TrainingDivergedError(WavecastError):
    code = "training-diverged"

    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        msg = f"training diverged (non-finite loss) at epoch {epoch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CalibrationMissingError(WavecastError):
    code = "calibration-missing"


class CheckpointError(WavecastError):
    code = "checkpoint"


class ConfigError(WavecastError):
    code = "config"
