"""Windowed-sinc fractional interpolation shared by the channel model and the
receiver's SFO correction."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

DEFAULT_TAPS = 32
PHASES = 4096


def kernel(t: np.ndarray, taps: int) -> np.ndarray:
    """Lanczos window times sinc, support |t| < taps / 2."""
    a = taps / 2
    h = np.sinc(t) * np.sinc(t / a)
    h[np.abs(t) >= a] = 0.0
    return h


@lru_cache(maxsize=8)
def _phase_table(taps: int) -> np.ndarray:
    half = taps // 2
    offs = np.arange(-half + 1, half + 1)
    frac = np.arange(PHASES + 1) / PHASES
    h = kernel(offs[None, :] - frac[:, None], taps)
    h /= h.sum(axis=1, keepdims=True)
    h[0] = offs == 0
    return h


def interpolate(x: np.ndarray, positions: np.ndarray, taps: int = DEFAULT_TAPS) -> np.ndarray:
    """Evaluate the band-limited continuation of ``x`` at fractional sample
    positions. Samples outside ``x`` are taken as zero.

    The fractional part is quantized to 1/PHASES of a sample; integer
    positions return the input samples exactly.
    """
    if taps < 2 or taps % 2:
        raise ValueError(f"taps must be even and >= 2, got {taps}")
    x = np.asarray(x)
    positions = np.asarray(positions, dtype=float)
    half = taps // 2
    table = _phase_table(taps)
    out = np.zeros(positions.shape, dtype=np.result_type(x.dtype, np.float64))
    if x.size == 0 or positions.size == 0:
        return out
    # positions far outside the support would only see zeros
    sel = np.flatnonzero((positions > -half) & (positions < x.size + half - 1))
    q = np.rint(positions[sel] * PHASES).astype(np.int64)
    xc = np.ascontiguousarray(x, dtype=np.complex128)
    vals = _fir_gather(xc, q, table, half)
    out[sel] = vals if np.iscomplexobj(out) else vals.real
    return out


@njit(cache=True, nogil=True)
def _fir_gather(x, q, table, half):
    n = x.size
    taps = table.shape[1]
    out = np.zeros(q.size, dtype=np.complex128)
    for i in range(q.size):
        base = q[i] // PHASES
        row = table[q[i] - base * PHASES]
        acc = 0j
        for j in range(taps):
            k = base - half + 1 + j
            if 0 <= k < n:
                acc += x[k] * row[j]
        out[i] = acc
    return out


def delay(x: np.ndarray, d: float, taps: int = DEFAULT_TAPS, extra: int = 0) -> np.ndarray:
    """y[n] = x(n - d); output is ``x.size + ceil(d) + extra`` long."""
    n_out = x.size + int(np.ceil(d)) + extra
    k = int(np.floor(d))
    mu = d - k
    if mu == 0.0:
        y = np.zeros(n_out, dtype=np.result_type(x.dtype, np.float64))
        y[k:k + x.size] = x
        return y
    return interpolate(x, np.arange(n_out) - d, taps)


def resample(x: np.ndarray, ratio: float, taps: int = DEFAULT_TAPS,
             n_out: int | None = None) -> np.ndarray:
    """y[n] = x(n * ratio). ``ratio`` is exactly 1 -> copy."""
    if n_out is None:
        n_out = int(np.floor((x.size - 1) / ratio)) + 1 if x.size else 0
    if ratio == 1.0:
        y = np.zeros(n_out, dtype=np.result_type(x.dtype, np.float64))
        m = min(n_out, x.size)
        y[:m] = x[:m]
        return y
    return interpolate(x, np.arange(n_out) * ratio, taps)
