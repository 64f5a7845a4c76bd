"""Channel and transmitter/receiver mismatch model.

The composite channel is applied in a fixed order:
multipath -> CFO -> SFO -> STO + noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import interp
from .errors import ConfigurationError


@dataclass(frozen=True)
class PathSpec:
    delay_s: float = 0.0
    gain: complex = 1.0
    doppler_hz: float = 0.0

    def __post_init__(self):
        if self.delay_s < 0:
            raise ConfigurationError(f"path delay must be >= 0, got {self.delay_s}")


@dataclass(frozen=True)
class ChannelConfig:
    paths: tuple[PathSpec, ...] = (PathSpec(),)
    sto: float = 0.0  # samples
    cfo_hz: float = 0.0
    sfo_ppm: float = 0.0
    snr_db: float = math.inf
    seed: int = 0
    cpo_rad: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ConfigurationError("channel needs at least one path")
        main = abs(self.paths[0].gain)
        if any(abs(p.gain) > main for p in self.paths[1:]):
            raise ConfigurationError("path 0 must be the main (strongest) path")
        if abs(self.sfo_ppm) >= 1000:
            raise ConfigurationError(f"|SFO| must be < 1000 ppm, got {self.sfo_ppm}")
        if self.sto < 0:
            raise ConfigurationError(f"STO must be >= 0 samples, got {self.sto}")

    def check_rate(self, fs: float) -> None:
        if abs(self.cfo_hz) >= fs / 2:
            raise ConfigurationError(f"|CFO| must be < Fs/2 = {fs / 2:g} Hz")

    @property
    def is_identity(self) -> bool:
        p = self.paths
        return (len(p) == 1 and p[0] == PathSpec() and self.sto == 0 and self.cfo_hz == 0
                and self.sfo_ppm == 0 and math.isinf(self.snr_db) and self.cpo_rad == 0)


def noise_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; (seed, stream) pairs give independent streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def apply_multipath(x: np.ndarray, paths, fs: float, taps: int = interp.DEFAULT_TAPS) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    delays = [p.delay_s * fs for p in paths]
    n_out = x.size + max(int(math.ceil(d)) for d in delays)
    y = np.zeros(n_out, dtype=complex)
    n = np.arange(n_out)
    for p, d in zip(paths, delays):
        yp = interp.delay(x, d, taps)
        yp = np.pad(yp, (0, n_out - yp.size))
        if p.doppler_hz:
            yp *= np.exp(2j * np.pi * p.doppler_hz / fs * n)
        y += p.gain * yp
    return y


def apply_cfo(x: np.ndarray, cfo_hz: float, fs: float, phase0: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if cfo_hz == 0 and phase0 == 0:
        return x.copy()
    n = np.arange(x.size)
    return x * np.exp(1j * (2 * np.pi * cfo_hz / fs * n + phase0))


def apply_sfo(x: np.ndarray, ppm: float, taps: int = interp.DEFAULT_TAPS) -> np.ndarray:
    """Sample the stream with a receiver clock running (1 + ppm 1e-6) times the
    transmitter clock: y[n] = x(n / (1 + ppm 1e-6))."""
    return interp.resample(np.asarray(x, dtype=complex), 1.0 / (1.0 + ppm * 1e-6), taps)


def apply_sto_and_noise(x: np.ndarray, sto: float, snr_db: float, seed: int,
                        signal_power: float | None = None,
                        taps: int = interp.DEFAULT_TAPS) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if signal_power is None:
        signal_power = float(np.mean(np.abs(x) ** 2)) if x.size else 0.0
    y = interp.delay(x, sto, taps) if sto else x.copy()
    if not math.isinf(snr_db):
        sigma2 = signal_power / 10 ** (snr_db / 10)
        rng = noise_rng(seed)
        w = rng.standard_normal((2, y.size))
        y = y + math.sqrt(sigma2 / 2) * (w[0] + 1j * w[1])
    return y


@dataclass
class ChannelOutput:
    samples: np.ndarray = field(repr=False)
    signal_power: float
    interpolator: str


def apply_channel(x: np.ndarray, cfg: ChannelConfig, fs: float,
                  taps: int = interp.DEFAULT_TAPS) -> ChannelOutput:
    cfg.check_rate(fs)
    y = apply_multipath(x, cfg.paths, fs, taps)
    y = apply_cfo(y, cfg.cfo_hz, fs, cfg.cpo_rad)
    if cfg.sfo_ppm:
        y = apply_sfo(y, cfg.sfo_ppm, taps)
    power = float(np.mean(np.abs(y) ** 2)) if y.size else 0.0
    y = apply_sto_and_noise(y, cfg.sto, cfg.snr_db, cfg.seed, power, taps)
    return ChannelOutput(y, power, f"lanczos-{taps}")
