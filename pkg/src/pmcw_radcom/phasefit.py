"""Weighted line fits to unwrapped spectral phase (delay estimation)."""

from __future__ import annotations

import numpy as np


def signed_bins(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, 1.0 / n)


def wls_line(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Weighted LS fit y = slope * x + intercept."""
    sw = w.sum()
    mx = (w * x).sum() / sw
    my = (w * y).sum() / sw
    slope = (w * (x - mx) * (y - my)).sum() / (w * (x - mx) ** 2).sum()
    return float(slope), float(my - slope * mx)


def unwrap_from_center(phase: np.ndarray, center: int, seed_bins: int = 10) -> np.ndarray:
    """Unwrap a frequency-sorted phase vector outward from ``center``.

    The centre sample (DC, which an MLS leaves nearly empty) is replaced by the
    circular mean of the ``seed_bins`` bins around it, so its noisy phase
    cannot push one side of the band onto another branch.
    """
    lo = max(center - seed_bins // 2, 0)
    hi = center + seed_bins // 2 + 1
    near = np.r_[phase[lo:center], phase[center + 1:hi]]
    ph = phase.copy()
    if near.size:
        ph[center] = np.angle(np.mean(np.exp(1j * near)))
    right = np.unwrap(ph[center:])
    left = np.unwrap(ph[center::-1])[::-1]
    return np.concatenate([left[:-1], right])


def phase_slopes(cross: np.ndarray, weights: np.ndarray | None = None,
                 band: float = 1.0) -> np.ndarray:
    """Per-row phase slope (rad / bin) of cross-spectra in FFT bin order.

    DC is excluded, as is everything above ``band`` times Nyquist; each row
    gets its own intercept.
    """
    cross = np.atleast_2d(cross)
    n = cross.shape[1]
    k = signed_bins(n)
    order = np.argsort(k)
    ks = k[order]
    center = int(np.flatnonzero(ks == 0)[0])
    use = (ks != 0) & (np.abs(ks) <= band * n / 2)
    base_w = np.ones(n) if weights is None else np.asarray(weights)[order]
    out = np.empty(cross.shape[0])
    for i, row in enumerate(cross):
        d = row[order]
        ph = unwrap_from_center(np.angle(d), center)
        w = base_w * np.abs(d)
        out[i], _ = wls_line(ks[use], ph[use], w[use])
    return out
