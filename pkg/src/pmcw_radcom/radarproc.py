"""Monostatic range-velocity processing of a PMCW frame."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .commdemod import accumulate_blocks, correlate_blocks
from .impairments import ChannelConfig, PathSpec
from .seqgen import ChipSequence
from .sysparams import SPEED_OF_LIGHT, FramePlan, derive_parameters


@dataclass(frozen=True)
class Target:
    range_m: float
    velocity_mps: float
    gain: complex = 1.0

    def delay_s(self) -> float:
        return 2 * self.range_m / SPEED_OF_LIGHT

    def doppler_hz(self, fc: float) -> float:
        return 2 * self.velocity_mps * fc / SPEED_OF_LIGHT


def echo_channel(targets, plan: FramePlan, snr_db: float = math.inf, seed: int = 0) -> ChannelConfig:
    """Point targets as channel paths, strongest first (path 0 must dominate)."""
    if not targets:
        raise ValueError("at least one target is required")
    ts = sorted(targets, key=lambda t: -abs(t.gain))
    paths = tuple(PathSpec(t.delay_s(), t.gain, t.doppler_hz(plan.fc)) for t in ts)
    return ChannelConfig(paths=paths, snr_db=snr_db, seed=seed)


@dataclass(frozen=True, eq=False)
class RangeDopplerMap:
    cmap: np.ndarray = field(repr=False)  # N range bins x M velocity bins, complex
    range_axis: np.ndarray = field(repr=False)
    velocity_axis: np.ndarray = field(repr=False)
    range_res: float
    vel_res: float

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.cmap) ** 2

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.cmap)

    @property
    def shape(self):
        return self.cmap.shape


@dataclass(frozen=True)
class Detection:
    range_m: float
    velocity_mps: float
    power_db: float  # relative to the map median
    range_bin: int
    velocity_bin: int


def range_profiles(rx_payload: np.ndarray, plan: FramePlan, ref: ChipSequence,
                   symbols=None) -> np.ndarray:
    """N x M matrix: column k is the range profile of block k.

    ``symbols`` are the transmitted block symbols; multiplying them back out
    strips the BPSK modulation so that slow time is coherent.
    """
    corr = correlate_blocks(accumulate_blocks(rx_payload, plan), ref).rows
    if symbols is not None:
        corr = corr * np.conj(np.asarray(symbols))[:, None]
    return corr.T


def range_doppler(profiles: np.ndarray, plan: FramePlan, window: str | None = None) -> RangeDopplerMap:
    """Slow-time DFT per range bin, shifted so that zero velocity sits at
    column M // 2."""
    n, m = profiles.shape
    x = profiles
    if window is not None:
        from scipy.signal import get_window
        x = x * get_window(window, m, fftbins=True)[None, :]
    cmap = np.fft.fftshift(np.fft.fft(x, axis=1), axes=1)
    rep = derive_parameters(plan)
    r_axis = np.arange(n) * rep.range_res_m
    v_axis = (np.arange(m) - m // 2) * rep.vel_res_mps
    return RangeDopplerMap(cmap, r_axis, v_axis, rep.range_res_m, rep.vel_res_mps)


def _vertex(lm: float, c: float, rp: float) -> float:
    den = lm - 2 * c + rp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (lm - rp) / den, -0.5, 0.5))


def detect(rdm: RangeDopplerMap, threshold_db: float = 13.0) -> list[Detection]:
    """Cells that are 3x3 local maxima (both axes wrap) and exceed the map
    median by ``threshold_db``; position refined by a parabola through the
    log-power of the neighbours along each axis."""
    p = rdm.power
    med = float(np.median(p))
    if not np.isfinite(med) or p.max() <= 0:
        return []
    floor = max(med, np.finfo(float).tiny)
    peaks = (p == ndimage.maximum_filter(p, size=3, mode="wrap")) & (p > floor * 10 ** (threshold_db / 10))
    n, m = p.shape
    lp = 10 * np.log10(np.maximum(p, floor * 1e-30))
    vmax = rdm.vel_res * (m // 2)
    out = []
    for i, j in zip(*np.nonzero(peaks)):
        dr = _vertex(lp[(i - 1) % n, j], lp[i, j], lp[(i + 1) % n, j])
        dv = _vertex(lp[i, (j - 1) % m], lp[i, j], lp[i, (j + 1) % m])
        r = ((i + dr) % n) * rdm.range_res
        v = float(np.clip((j + dv - m // 2) * rdm.vel_res, -vmax, vmax))
        out.append(Detection(float(r), v, float(lp[i, j] - 10 * np.log10(floor)), int(i), int(j)))
    out.sort(key=lambda d: -d.power_db)
    return out


def integration_gain_db(rdm: RangeDopplerMap, rbin: int, vbin: int, snr_in_db: float,
                        box: int = 2) -> float:
    """Target energy (a +/-box neighbourhood, to absorb straddle loss) over
    the mean noise cell power, minus the per-sample input SNR. Noise cells
    exclude the target's range rows and velocity columns."""
    p = rdm.power
    n, m = p.shape
    ri = (rbin + np.arange(-box, box + 1)) % n
    vi = (vbin + np.arange(-box, box + 1)) % m
    keep_r = np.ones(n, bool)
    keep_r[ri] = False
    keep_v = np.ones(m, bool)
    keep_v[vi] = False
    noise = float(np.mean(p[np.ix_(keep_r, keep_v)]))
    sig = float(np.sum(p[np.ix_(ri, vi)])) - noise * ri.size * vi.size
    return 10 * math.log10(sig / noise) - snr_in_db
