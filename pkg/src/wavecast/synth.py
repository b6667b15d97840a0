"""Deterministic synthetic wave-signal generation.

Stands in for proprietary chamber data at desk scale. Four qualitative
regimes are covered (regular, amplifying, damping, calm) plus a composite
of several gravity-band sinusoids used as the default training signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import TimeSeries

WAVE_KINDS = ("regular", "amplifying", "damping", "calm", "composite")

CALM_AMPLITUDE_CEILING = 0.05  # m; toolkit convention for "calm"


@dataclass(frozen=True)
class WaveSpec:
    """Recipe for one synthetic signal.

    ``components`` is a list of (amplitude m, period s, phase rad) triples.
    ``envelope_rate`` (1/s) only applies to amplifying/damping kinds.
    Gaussian white noise with std ``noise_std`` is drawn from ``seed``.
    """

    kind: str
    components: tuple = field(default_factory=tuple)
    envelope_rate: float = 0.0
    noise_std: float = 0.0
    dt: float = 0.05
    duration: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in WAVE_KINDS:
            raise ValueError(f"unknown wave kind {self.kind!r}, expected {WAVE_KINDS}")
        if not self.components:
            raise ValueError("at least one (amplitude, period, phase) component required")
        for amp, period, _phase in self.components:
            if period <= 0:
                raise ValueError(f"component period must be positive, got {period}")
            if amp < 0:
                raise ValueError(f"component amplitude must be >= 0, got {amp}")
        if self.kind == "calm":
            worst = max(a for a, _, _ in self.components)
            if worst > CALM_AMPLITUDE_CEILING:
                raise ValueError(
                    f"calm waves cap amplitudes at {CALM_AMPLITUDE_CEILING} m, got {worst}"
                )
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one sample")


def envelope(spec: WaveSpec, t: np.ndarray) -> np.ndarray:
    if spec.kind == "amplifying":
        return np.exp(spec.envelope_rate * t)
    if spec.kind == "damping":
        return np.exp(-spec.envelope_rate * t)
    return np.ones_like(t)


def generate(spec: WaveSpec) -> TimeSeries:
    """Render the signal: env(t) * sum_k A_k sin(2 pi t / T_k + phi_k) + noise."""
    n = int(round(spec.duration / spec.dt))
    t = np.arange(n) * spec.dt
    x = np.zeros(n)
    for amp, period, phase in spec.components:
        x += amp * np.sin(2.0 * np.pi * t / period + phase)
    x *= envelope(spec, t)
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        x = x + rng.normal(0.0, spec.noise_std, size=n)
    return TimeSeries(values=x, dt=spec.dt, unit="meter", t0=0.0)


def default_training_spec(seed: int = 0, duration: float = 600.0) -> WaveSpec:
    """Composite gravity-band training signal.

    Three components with periods drawn in [5, 15] s and amplitudes in
    [0.2, 1.0] m, random phases, 0.02 m noise, sampled at 20 Hz.
    """
    rng = np.random.default_rng(seed)
    components = tuple(
        (
            float(rng.uniform(0.2, 1.0)),
            float(rng.uniform(5.0, 15.0)),
            float(rng.uniform(0.0, 2.0 * np.pi)),
        )
        for _ in range(3)
    )
    return WaveSpec(
        kind="composite",
        components=components,
        noise_std=0.02,
        dt=0.05,
        duration=duration,
        seed=seed,
    )


def preset(name: str, seed: int = 0, duration: float = 120.0) -> WaveSpec:
    """Named specs: the four qualitative wave regimes plus the composite."""
    if name == "regular":
        return WaveSpec(
            kind="regular",
            components=((0.8, 8.0, 0.0),),
            noise_std=0.02,
            duration=duration,
            seed=seed,
        )
    if name == "amplifying":
        return WaveSpec(
            kind="amplifying",
            components=((0.3, 8.0, 0.0),),
            envelope_rate=0.01,
            noise_std=0.02,
            duration=duration,
            seed=seed,
        )
    if name == "damping":
        return WaveSpec(
            kind="damping",
            components=((1.0, 8.0, 0.0),),
            envelope_rate=0.01,
            noise_std=0.02,
            duration=duration,
            seed=seed,
        )
    if name == "calm":
        return WaveSpec(
            kind="calm",
            components=((0.03, 7.0, 0.0), (0.02, 11.0, 1.0)),
            noise_std=0.005,
            duration=duration,
            seed=seed,
        )
    if name == "composite":
        return default_training_spec(seed=seed, duration=duration)
    raise ValueError(f"unknown preset {name!r}")
