"""Preamble-based synchronization.

Timing and carrier offset come from the two S&C blocks (three repetitions
of an N_S&C-chip MLS each); the sampling frequency offset comes from the
identical PRBS pairs of the SFO preamble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import interp
from .errors import AcquisitionError
from .impairments import apply_cfo
from .phasefit import phase_slopes
from .seqgen import ChipSequence
from .sysparams import FramePlan


@dataclass(frozen=True, eq=False)
class ScMetric:
    level: np.ndarray = field(repr=False)  # normalized metric in [0, 1]
    corr: np.ndarray = field(repr=False)  # lagged window product sums
    n_sc: int
    start: int = 0  # buffer index of level[0]; negative when zero-led


def sc_metric(y: np.ndarray, n_sc: int, lead: int = 0) -> ScMetric:
    """Sliding S&C correlation between two adjacent N_S&C windows.

    corr[n] = sum_k conj(r[n+k]) r[n+k+N_S&C]; level[n] is |corr[n]|^2 over
    the squared larger window energy, so it stays in [0, 1]. ``lead`` zeros
    are prepended so that a preamble starting at sample 0 still shows its full
    plateau edge.
    """
    y = np.asarray(y, dtype=complex)
    if y.size < 2 * n_sc + 1:
        raise ValueError(f"need at least {2 * n_sc + 1} samples, got {y.size}")
    r = np.concatenate([np.zeros(lead, complex), y]) if lead else y
    # running sums make every shift O(1)
    cs = np.concatenate([[0], np.cumsum(np.conj(r[:-n_sc]) * r[n_sc:])])
    p = cs[n_sc:] - cs[:-n_sc]
    ce = np.concatenate([[0.0], np.cumsum(np.abs(r) ** 2)])
    e = ce[n_sc:] - ce[:-n_sc]
    e1 = e[: p.size]
    e2 = e[n_sc: n_sc + p.size]
    den = np.maximum(e1, e2) ** 2
    level = np.zeros(p.size)
    ok = den > 1e-300
    level[ok] = np.abs(p[ok]) ** 2 / den[ok]
    return ScMetric(np.minimum(level, 1.0), p, n_sc, -lead)


@dataclass(frozen=True)
class Plateau:
    first: int  # metric indices, inclusive
    last: int
    peak: float

    @property
    def width(self) -> int:
        return self.last - self.first + 1

    @property
    def mid(self) -> int:
        return self.first + self.width // 2


def find_plateau(metric: ScMetric, threshold: float = 0.9, floor: float = 0.5,
                 max_gap: int = 2) -> Plateau:
    g = metric.level
    peak = float(g.max()) if g.size else 0.0
    if peak < floor:
        raise AcquisitionError(f"no S&C plateau: peak metric {peak:.3f} below floor {floor}")
    above = np.flatnonzero(g >= threshold * peak)
    first = last = int(above[0])
    for i in above[1:]:
        if i - last - 1 > max_gap:
            break
        last = int(i)
    return Plateau(first, last, float(g[first:last + 1].max()))


def estimate_sto(metric: ScMetric, threshold: float = 0.9, floor: float = 0.5,
                 max_gap: int = 2) -> int:
    """First sample of S&C block 1, from the midpoint of the first plateau."""
    pl = find_plateau(metric, threshold, floor, max_gap)
    return pl.mid - math.ceil((metric.n_sc + 1) / 2) + metric.start


def refine_sto(y: np.ndarray, coarse: int, preamble: np.ndarray, search: int) -> int:
    """Matched-filter the known S&C preamble around the coarse estimate and
    return the sample offset of the strongest response."""
    lo = max(coarse - search, 0)
    hi = min(coarse + search + preamble.size, y.size)
    seg = y[lo:hi]
    if seg.size < preamble.size:
        raise AcquisitionError("buffer too short for timing refinement")
    c = signal.correlate(seg, preamble, mode="valid", method="fft")
    return lo + int(np.argmax(np.abs(c)))


def estimate_cfo_fractional(p: complex, n_sc: int, fs: float) -> float:
    return float(np.angle(p) * fs / (2 * np.pi * n_sc))


@dataclass(frozen=True)
class IntegerCfo:
    hz: float
    bins: int  # units of Fs / (2 N_S&C)
    score: float
    status: str  # "ok" | "ambiguous" | "out_of_range"


def estimate_cfo_integer(block1: np.ndarray, block2: np.ndarray, seq1: ChipSequence,
                         seq2: ChipSequence, fs: float, search_bins: int = 8,
                         min_score: float = 0.5) -> IntegerCfo:
    """Integer CFO from one N_S&C period of each S&C block, both cut at the
    same offset inside their block, after the fractional CFO is removed.

    A residual of q * Fs / N_S&C cyclically shifts both spectra by q bins; the
    known block-2/block-1 spectral ratio is slid over the received one and the
    best alignment wins. The fractional estimator is 2pi-ambiguous over
    Fs / N_S&C, so only even multiples of Fs / (2 N_S&C) are candidates.
    """
    n = len(seq1)
    r1 = np.fft.fft(block1)
    r2 = np.fft.fft(block2)
    v = np.conj(np.fft.fft(seq1.chips)) * np.fft.fft(seq2.chips)
    obs = np.conj(r1) * r2
    qmax = search_bins // 2
    qs = np.arange(-qmax, qmax + 1)
    scores = np.empty(qs.size)
    for i, q in enumerate(qs):
        vq = np.roll(v, q)
        num = np.abs(np.sum(obs * np.conj(vq)))
        den = np.sum(np.abs(obs) * np.abs(vq))
        scores[i] = num / den if den > 0 else 0.0
    order = np.argsort(scores)[::-1]
    best = int(qs[order[0]])
    top = float(scores[order[0]])
    status = "ok"
    if top < min_score:
        status = "out_of_range"
    elif qs.size > 1 and scores[order[1]] >= 0.99 * top:
        status = "ambiguous"
    return IntegerCfo(best * fs / n, 2 * best, top, status)


def estimate_sfo_tsai(y_sfo: np.ndarray, ref: ChipSequence, m_sfo: int,
                      band: float = 0.9) -> float:
    """SFO in ppm from the identical-PRBS pairs of the SFO preamble.

    ``y_sfo`` holds the m_sfo * N samples of the SFO preamble (CP copy
    first), already corrected for STO and CFO. Each pair is folded into one
    spectrum; against the energy-weighted average spectrum, pair p shows a
    phase ramp over frequency whose slope grows linearly with the pair's
    distance from the centroid. Slopes come from a weighted LS fit over the
    non-DC bins, then a weighted LS fit of slope against pair distance.
    ``band`` drops bins above that fraction of Nyquist, where the
    interpolating channel model is least accurate.
    """
    n = len(ref)
    n_pairs = (m_sfo - 1) // 2
    if n_pairs < 1:
        raise AcquisitionError("SFO preamble holds no PRBS pair")
    if y_sfo.size < m_sfo * n:
        raise AcquisitionError(f"SFO preamble needs {m_sfo * n} samples, got {y_sfo.size}")
    copies = np.asarray(y_sfo[n: m_sfo * n]).reshape(2 * n_pairs, n)
    spec = np.fft.fft(copies, axis=1)
    z = spec[0::2] + spec[1::2]
    energy = np.sum(np.abs(z) ** 2, axis=1)
    xref2 = np.abs(np.fft.fft(ref.chips)) ** 2
    # pair centres in copy units, relative to the energy-weighted centroid
    pos = 2.0 * np.arange(n_pairs)
    pos = pos - np.sum(energy * pos) / energy.sum()

    # Coarse pass on neighbouring pairs. Their ramps differ by one pair
    # spacing only, whereas the pair average used below can cancel itself
    # at some bins once the total drift across the preamble reaches a few
    # samples; aligning the pairs first keeps that average well conditioned.
    coarse = 0.0
    if n_pairs > 1:
        adj = phase_slopes(z[1:] * np.conj(z[:-1]), xref2, band)
        w = np.sqrt(energy[1:] * energy[:-1])
        coarse = -np.sum(w * adj) / (2 * np.pi * 2.0 * w.sum())
        k = np.fft.fftfreq(n, 1.0 / n)
        z = z * np.exp(2j * np.pi * coarse * np.outer(pos, k))

    zbar = np.sum(z, axis=0)
    slopes = phase_slopes(z * np.conj(zbar)[None, :], xref2, band)
    if np.any(np.abs(slopes) > np.pi):
        raise AcquisitionError("SFO phase slope exceeds half a cycle per bin")
    # slope of pair p = -2 pi * fine * pos_p
    fine = -np.sum(energy * pos * slopes) / (2 * np.pi * np.sum(energy * pos ** 2))
    return float((coarse + fine) * 1e6)


def correct_sfo(y: np.ndarray, ppm: float, taps: int = interp.DEFAULT_TAPS,
                n_out: int | None = None) -> np.ndarray:
    """Undo a receiver clock offset of ``ppm``: z[n] = y(n (1 + ppm 1e-6))."""
    return interp.resample(np.asarray(y, dtype=complex), 1.0 + ppm * 1e-6, taps, n_out)


@dataclass
class SyncConfig:
    threshold: float = 0.9
    floor: float = 0.5
    max_gap: int = 2
    int_cfo_search_bins: int = 8
    refine_timing: bool = True
    enable_tsai: bool = True
    tsai_band: float = 0.9
    taps: int = interp.DEFAULT_TAPS


@dataclass
class SyncReport:
    sto: int
    sto_coarse: int
    cfo_frac_hz: float
    cfo_int_hz: float
    cfo_hz: float
    cfo_int_bins: int
    cfo_int_status: str
    sfo_ppm: float
    metric_peak: float
    plateau_width: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def cfo_tx_hz(self) -> float:
        """CFO on the transmitter's time base. The S&C phase is measured per
        receiver sample, which runs (1 + SFO) faster than a transmit sample."""
        return self.cfo_hz * (1.0 + self.sfo_ppm * 1e-6)


def synchronize(y: np.ndarray, plan: FramePlan, seqs, cfg: SyncConfig | None = None, *,
                known_sto: int | None = None, known_cfo_hz: float | None = None,
                known_sfo_ppm: float | None = None):
    """Run the full preamble chain on a received buffer.

    Returns the report and the frame-aligned, CFO- and SFO-corrected stream
    (``plan.frame_len`` samples, index 0 = first sample of S&C block 1).
    Passing ``known_sto`` and ``known_cfo_hz`` skips the S&C stage and
    ``known_sfo_ppm`` skips the SFO preamble stage; the report then carries
    status "known" and NaN plateau diagnostics.
    """
    cfg = cfg or SyncConfig()
    seq1, seq2, pay = seqs
    n_sc, fs = plan.n_sc, plan.fs
    y = np.asarray(y, dtype=complex)

    if known_sto is None or known_cfo_hz is None:
        metric = sc_metric(y, n_sc, lead=n_sc)
        pl = find_plateau(metric, cfg.threshold, cfg.floor, cfg.max_gap)
        coarse = pl.mid - math.ceil((n_sc + 1) / 2) + metric.start
        f_frac = estimate_cfo_fractional(metric.corr[pl.mid], n_sc, fs)

        # one period from the middle repetition of each block, same in-block offset
        s = max(coarse, 0) + n_sc
        seg = apply_cfo(y[s: s + 4 * n_sc], -f_frac, fs, -2 * np.pi * f_frac / fs * s)
        if seg.size < 4 * n_sc:
            raise AcquisitionError("buffer ends inside the S&C preamble")
        icfo = estimate_cfo_integer(seg[:n_sc], seg[3 * n_sc:], seq1, seq2, fs,
                                    cfg.int_cfo_search_bins)
        total = f_frac + icfo.hz
        status, peak, width = icfo.status, pl.peak, pl.width

        y_c = apply_cfo(y, -total, fs)
        sto = coarse
        if cfg.refine_timing:
            preamble = np.concatenate([np.tile(seq1.chips, 3), np.tile(seq2.chips, 3)]).astype(float)
            sto = refine_sto(y_c, coarse, preamble, search=n_sc // 2)
    else:
        sto = coarse = int(known_sto)
        total = float(known_cfo_hz)
        status, peak, width = "known", float("nan"), 0
        y_c = apply_cfo(y, -total, fs)

    sfo = 0.0
    if known_sfo_ppm is not None:
        sfo = float(known_sfo_ppm)
    elif cfg.enable_tsai:
        start = sto + plan.sc_len
        sfo = estimate_sfo_tsai(y_c[start: start + plan.sfo_len], pay, plan.m_sfo, cfg.tsai_band)

    aligned = y_c[sto:]
    if sfo:
        aligned = correct_sfo(aligned, sfo, cfg.taps, plan.frame_len)
    aligned = _fit(aligned, plan.frame_len)

    bin_hz = fs / (2 * n_sc)
    int_bins = int(round(total / bin_hz))
    report = SyncReport(
        sto=int(sto),
        sto_coarse=int(coarse),
        cfo_frac_hz=total - int_bins * bin_hz,
        cfo_int_hz=int_bins * bin_hz,
        cfo_hz=total,
        cfo_int_bins=int_bins,
        cfo_int_status=status,
        sfo_ppm=sfo,
        metric_peak=peak,
        plateau_width=width,
    )
    return report, aligned


def _fit(x: np.ndarray, n: int) -> np.ndarray:
    if x.size >= n:
        return x[:n]
    return np.concatenate([x, np.zeros(n - x.size, x.dtype)])
