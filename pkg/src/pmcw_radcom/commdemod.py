"""Post-synchronization communication receiver.

Per block: drop the CP repetition, accumulate the remaining A-1, correlate
with the reference PRBS. Pilot blocks then give the residual SFO (drift of the
correlation peak), the residual CFO / Doppler (phase progression of the peak)
and, after both are removed, the averaged channel frequency response used to
equalize the data blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phasefit import phase_slopes
from .seqgen import ChipSequence, circular_correlate
from .sysparams import FramePlan, derive_parameters
from .txframe import pilot_indices


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    rows: np.ndarray = field(repr=False)  # M x N
    pilots: np.ndarray = field(repr=False)

    @property
    def data_index(self) -> np.ndarray:
        mask = np.ones(self.rows.shape[0], dtype=bool)
        mask[self.pilots] = False
        return np.flatnonzero(mask)


@dataclass
class PilotEstimates:
    cfr: np.ndarray = field(repr=False)
    cfr_mask: np.ndarray = field(repr=False)
    residual_cfo_hz: float
    residual_sfo_ppm: float
    main_lag: int
    peak_positions: np.ndarray = field(repr=False)
    peak_phases: np.ndarray = field(repr=False)


@dataclass
class DemodReport:
    bits: np.ndarray = field(repr=False)
    symbols: np.ndarray = field(repr=False)
    mer_db: float
    ber: float | None
    n_errors: int | None
    peak_snr_db: np.ndarray = field(repr=False)


def accumulate_blocks(y: np.ndarray, plan: FramePlan) -> BlockMatrix:
    """Row k = sum of repetitions 1..A-1 of payload block k."""
    y = np.asarray(y)
    need = plan.payload_len
    if y.size < need:
        y = np.concatenate([y, np.zeros(need - y.size, y.dtype)])
    blocks = y[:need].reshape(plan.m, plan.a, plan.n)
    rows = blocks[:, 1:, :].sum(axis=1)
    return BlockMatrix(rows, pilot_indices(plan.m, plan.pilot_spacing))


def correlate_blocks(bm: BlockMatrix, ref: ChipSequence) -> BlockMatrix:
    return BlockMatrix(circular_correlate(bm.rows, ref), bm.pilots)


def main_lag(corr: BlockMatrix) -> int:
    power = np.sum(np.abs(corr.rows[corr.pilots]) ** 2, axis=0)
    return int(np.argmax(power))


def wrap_doppler(f: float, limit: float) -> float:
    """Map into [-limit, limit)."""
    return float((f + limit) % (2 * limit) - limit)


def estimate_pilot_doppler(corr: BlockMatrix, plan: FramePlan, lag: int | None = None) -> float:
    """Residual CFO / main-path Doppler from the phase step between
    consecutive pilot peaks. Only unambiguous within half the pilot rate."""
    if corr.pilots.size < 2:
        raise ValueError("Doppler estimation needs at least two pilots")
    if lag is None:
        lag = main_lag(corr)
    z = corr.rows[corr.pilots, lag]
    step = np.angle(np.sum(np.conj(z[:-1]) * z[1:]))
    t_pil = plan.pilot_spacing * plan.block_len / plan.fs
    return wrap_doppler(step / (2 * np.pi * t_pil), 1.0 / (2 * t_pil))


def parabolic_peak(corr_rows: np.ndarray, lag: int, search: int = 3) -> np.ndarray:
    """Sub-sample peak position per row: the largest magnitude within
    ``search`` lags of ``lag``, refined by a parabola through it and its two
    neighbours. Positions are unwrapped around ``lag``."""
    n = corr_rows.shape[1]
    rows = np.arange(corr_rows.shape[0])
    win = (lag + np.arange(-search, search + 1)) % n
    best = lag - search + np.argmax(np.abs(corr_rows[:, win]), axis=1)
    a = np.abs(corr_rows[rows, (best - 1) % n])
    b = np.abs(corr_rows[rows, best % n])
    c = np.abs(corr_rows[rows, (best + 1) % n])
    den = a - 2 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(den != 0, 0.5 * (a - c) / den, 0.0)
    return best + np.clip(d, -0.5, 0.5)


def phase_slope_delays(rows: np.ndarray, ref: ChipSequence, band: float = 0.9) -> np.ndarray:
    """Delay of each row relative to row 0 from the phase ramp of the
    cross-spectrum; noise in row 0 only adds a common offset."""
    spec = np.fft.fft(rows, axis=1) * np.conj(np.fft.fft(ref.chips))[None, :]
    slopes = phase_slopes(spec * np.conj(spec[0])[None, :], band=band)
    return -slopes * rows.shape[1] / (2 * np.pi)


def estimate_residual_sfo(positions: np.ndarray, pilot_blocks: np.ndarray, plan: FramePlan) -> float:
    """LS line through pilot peak position vs block index, in ppm."""
    positions = np.asarray(positions, dtype=float)
    b = np.asarray(pilot_blocks, dtype=float)
    if b.size < 2:
        return 0.0
    slope = np.polyfit(b, positions, 1)[0]  # samples per block
    return float(slope / plan.block_len * 1e6)


def shift_rows(rows: np.ndarray, delays: np.ndarray) -> np.ndarray:
    """Advance each row cyclically by ``delays`` samples (phase ramp)."""
    n = rows.shape[1]
    k = np.fft.fftfreq(n, 1.0 / n)
    ramp = np.exp(2j * np.pi * np.outer(delays, k) / n)
    return np.fft.ifft(np.fft.fft(rows, axis=1) * ramp, axis=1)


def derotate_rows(rows: np.ndarray, f_hz: float, plan: FramePlan) -> np.ndarray:
    t = np.arange(rows.shape[0]) * plan.block_len / plan.fs
    return rows * np.exp(-2j * np.pi * f_hz * t)[:, None]


def estimate_cfr(pilot_rows: np.ndarray, ref: ChipSequence, a: int,
                 floor: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Average pilot spectrum over the reference spectrum scaled by A-1.

    Bins where |DFT(ref)| falls under ``floor`` times its median are masked
    out; for an MLS that is only DC.
    """
    ref_f = np.fft.fft(ref.chips.astype(float))
    mag = np.abs(ref_f)
    mask = mag >= floor * np.median(mag)
    mean_f = np.mean(np.fft.fft(pilot_rows, axis=1), axis=0)
    cfr = np.ones(ref_f.size, dtype=complex)
    cfr[mask] = mean_f[mask] / ((a - 1) * ref_f[mask])
    cfr[mask & (np.abs(cfr) < 1e-12)] = 1e-12
    return cfr, mask


def equalize_and_decide(bm: BlockMatrix, cfr: np.ndarray, mask: np.ndarray, ref: ChipSequence,
                        true_bits=None) -> DemodReport:
    """Divide each block spectrum by the CFR (equalize first), correlate with
    the reference at lag 0, normalize by the mean pilot value, slice."""
    ref_f = np.fft.fft(ref.chips.astype(float))
    eq = np.fft.fft(bm.rows, axis=1) / cfr[None, :]
    eq[:, ~mask] = 0
    z = eq @ np.conj(ref_f) / ref_f.size  # circular correlation at lag 0
    scale = np.mean(z[bm.pilots])
    z = z / scale
    data = z[bm.data_index]
    bits = (data.real < 0).astype(np.uint8)

    ideal = 1.0 - 2.0 * bits
    ber = n_err = None
    if true_bits is not None:
        true_bits = np.asarray(true_bits, dtype=np.uint8)
        n_err = int(np.count_nonzero(bits != true_bits))
        ber = n_err / bits.size if bits.size else 0.0
        ideal = 1.0 - 2.0 * true_bits
    err = np.sum(np.abs(data - ideal) ** 2)
    sig = np.sum(np.abs(ideal) ** 2)
    if not bits.size:
        mer = float("nan")
    elif err == 0:
        mer = float("inf")
    else:
        mer = float(10 * np.log10(sig / err))

    corr = circular_correlate(np.fft.ifft(eq, axis=1), ref)
    pk = np.abs(corr[:, 0]) ** 2
    side = (np.sum(np.abs(corr) ** 2, axis=1) - pk) / max(corr.shape[1] - 1, 1)
    with np.errstate(divide="ignore"):
        psnr = 10 * np.log10(pk / np.maximum(side, 1e-300))
    return DemodReport(bits, data, mer, ber, n_err, psnr)


@dataclass
class DemodOptions:
    pilot_corrections: bool = True
    sfo_method: str = "phase"  # or "parabolic"
    band: float = 0.9


def demodulate(y_payload: np.ndarray, plan: FramePlan, ref: ChipSequence, true_bits=None,
               opts: DemodOptions | None = None) -> tuple[DemodReport, PilotEstimates]:
    """Full receive chain on a payload-aligned stream.

    Order: residual SFO from the pilot peaks -> per-block cyclic shift ->
    Doppler de-rotation -> pilot CFR average -> equalize -> decide.
    """
    opts = opts or DemodOptions()
    bm = accumulate_blocks(y_payload, plan)
    corr = correlate_blocks(bm, ref)
    lag = main_lag(corr)
    pil = bm.pilots
    phases = np.angle(corr.rows[pil, lag])
    if opts.sfo_method == "phase":
        positions = lag + phase_slope_delays(bm.rows[pil], ref, opts.band)
    else:
        positions = parabolic_peak(corr.rows[pil], lag)
    rows = bm.rows
    f_res = 0.0
    sfo_res = 0.0
    if opts.pilot_corrections and pil.size >= 2:
        sfo_res = estimate_residual_sfo(positions, pil, plan)
        drift = sfo_res * 1e-6 * plan.block_len * np.arange(plan.m)
        rows = shift_rows(rows, drift)
        f_res = estimate_pilot_doppler(corr, plan, lag)
        rows = derotate_rows(rows, f_res, plan)
    cfr, mask = estimate_cfr(rows[pil], ref, plan.a)
    report = equalize_and_decide(BlockMatrix(rows, pil), cfr, mask, ref, true_bits)
    est = PilotEstimates(cfr, mask, f_res, sfo_res, lag, positions, phases)
    return report, est


def max_doppler(plan: FramePlan) -> float:
    return derive_parameters(plan).max_doppler_hz
