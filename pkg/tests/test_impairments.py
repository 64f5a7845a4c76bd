import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import signal

from pmcw_radcom import interp
from pmcw_radcom.acquisition import correct_sfo, find_plateau, sc_metric
from pmcw_radcom.commdemod import phase_slope_delays
from pmcw_radcom.errors import ConfigurationError
from pmcw_radcom.impairments import (ChannelConfig, PathSpec, apply_cfo, apply_channel,
                                     apply_multipath, apply_sfo, apply_sto_and_noise)
from pmcw_radcom.seqgen import LfsrSpec, circular_correlate, generate_mls, sequence_set
from pmcw_radcom.sysparams import preset
from pmcw_radcom.txframe import assemble_frame

FS = 1e9


def smooth_signal(n, bw=0.2, seed=0):
    rng = np.random.default_rng(seed)
    h = signal.firwin(257, bw)
    x = signal.lfilter(h, 1, rng.standard_normal(n + 300) + 1j * rng.standard_normal(n + 300))[300:]
    return x * signal.windows.tukey(n, 0.05)


def test_interpolator_exact_at_integers():
    x = np.random.default_rng(1).standard_normal(50)
    np.testing.assert_array_equal(interp.interpolate(x, np.arange(50.0)), x)
    np.testing.assert_array_equal(interp.delay(x, 3)[3:53], x)
    assert interp.interpolate(x, np.array([-40.0, 90.0])).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        interp.interpolate(x, np.arange(3.0), taps=7)


def test_interpolator_matches_direct_kernel_sum():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    pos = np.array([10.25, 31.5, 40.0 + 1 / 3])
    taps = 16
    direct = []
    for p in pos:
        k = np.arange(int(np.floor(p)) - taps // 2 + 1, int(np.floor(p)) + taps // 2 + 1)
        h = interp.kernel(p - k, taps)
        direct.append(np.sum(x[k] * h) / h.sum())
    np.testing.assert_allclose(interp.interpolate(x, pos, taps), direct, atol=2e-3)


def test_multipath_identity_and_integer_delay():
    x = np.exp(2j * np.pi * 0.01 * np.arange(300))
    np.testing.assert_array_equal(apply_multipath(x, [PathSpec()], FS), x)
    y = apply_multipath(x, [PathSpec(delay_s=100 / FS)], FS)
    assert y.size == 400
    np.testing.assert_array_equal(y[100:], x)
    assert np.all(y[:100] == 0)


def test_two_path_correlation_levels():
    seq = generate_mls(LfsrSpec.builtin(8)).chips.astype(float)
    x = np.tile(seq, 3)
    y = apply_multipath(x, [PathSpec(), PathSpec(7 / FS, 0.3j)], FS)
    block = y[255:510]
    c = circular_correlate(block, seq)
    mag = np.abs(c)
    top2 = sorted(np.argsort(mag)[-2:])
    assert top2 == [0, 7]
    # brute-force oracle of the same lags
    brute = [abs(sum(block[(k + l) % 255] * seq[k] for k in range(255))) for l in (0, 7)]
    np.testing.assert_allclose(mag[[0, 7]], brute, rtol=1e-9)
    assert 20 * np.log10(mag[0] / mag[7]) == pytest.approx(20 * np.log10(1 / 0.3), abs=0.1)


def test_multipath_energy():
    x = smooth_signal(4000)
    y = apply_multipath(x, [PathSpec(delay_s=12.37 / FS)], FS)
    assert np.sum(np.abs(y) ** 2) == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-3)
    y0 = apply_multipath(x, [PathSpec(delay_s=12 / FS)], FS)
    assert np.sum(np.abs(y0) ** 2) == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-9)


def test_cfo_examples():
    x = np.ones(8)
    np.testing.assert_allclose(apply_cfo(x, FS / 4, FS), [1, 1j, -1, -1j] * 2, atol=1e-12)
    np.testing.assert_array_equal(apply_cfo(x, 0, FS), x)
    fs = 1e6
    y = apply_cfo(np.ones(1001), -85e3, fs)
    phase = np.unwrap(np.angle(y))
    assert phase[-1] - phase[0] == pytest.approx(-2 * np.pi * 85, rel=1e-9)


def test_sfo_identity_and_drift():
    x = smooth_signal(1000)
    np.testing.assert_array_equal(apply_sfo(x, 0), x)
    # a receiver running 100 ppm fast collects 100 extra samples per 1e6
    y = apply_sfo(np.ones(1_000_001), 100)
    assert y.size - 1_000_001 == pytest.approx(100, abs=1)


def test_sfo_scales_tone_frequency():
    n = 1 << 16
    f0 = 0.1
    x = np.exp(2j * np.pi * f0 * np.arange(n))
    y = apply_sfo(x, 50)[:n] * np.hanning(n)
    spec = np.abs(np.fft.fft(y, 8 * n))
    k = int(np.argmax(spec))
    a, b, c = np.log(spec[k - 1: k + 2])
    f = (k + 0.5 * (a - c) / (a - 2 * b + c)) / (8 * n)
    assert f / f0 == pytest.approx(1 / (1 + 50e-6), rel=1e-3)


def test_sto_noise_identity_and_snr():
    x = smooth_signal(500)
    np.testing.assert_array_equal(apply_sto_and_noise(x, 0, math.inf, 0), x)
    s = np.ones(1_000_000, complex)
    y = apply_sto_and_noise(s, 0, 16.23, seed=5)
    snr = 10 * np.log10(1 / np.mean(np.abs(y - s) ** 2))
    assert snr == pytest.approx(16.23, abs=0.1)
    y2 = apply_sto_and_noise(s[:1000], 0, 16.23, seed=5)
    np.testing.assert_array_equal(y2, apply_sto_and_noise(s[:1000], 0, 16.23, seed=5))


def test_sto_moves_plateau():
    plan = preset("pmcw1s").with_blocks(5)
    seqs = sequence_set(plan.n, plan.n_sc)
    fr = assemble_frame(plan, seqs, np.zeros(plan.data_bits, np.uint8))
    # both copies delayed so neither plateau is clipped at sample 0
    p0 = find_plateau(sc_metric(apply_sto_and_noise(fr.samples, 1000, math.inf, 0), plan.n_sc))
    y = apply_sto_and_noise(fr.samples, 13345, math.inf, 0)
    p1 = find_plateau(sc_metric(y, plan.n_sc))
    assert p1.first - p0.first == 12345 and p1.last - p0.last == 12345


def test_composition_order():
    x = smooth_signal(3000, seed=3)
    cfg = ChannelConfig(paths=(PathSpec(), PathSpec(5.5 / FS, 0.2, 1e5)), sto=17.25,
                        cfo_hz=2e6, sfo_ppm=-40, snr_db=30, seed=9, cpo_rad=0.3)
    out = apply_channel(x, cfg, FS)
    y = apply_multipath(x, cfg.paths, FS)
    y = apply_cfo(y, cfg.cfo_hz, FS, cfg.cpo_rad)
    y = apply_sfo(y, cfg.sfo_ppm)
    p = np.mean(np.abs(y) ** 2)
    y = apply_sto_and_noise(y, cfg.sto, cfg.snr_db, cfg.seed, p)
    np.testing.assert_array_equal(out.samples, y)
    assert out.interpolator == f"lanczos-{interp.DEFAULT_TAPS}"
    # the other order gives a different stream
    z = apply_sfo(apply_multipath(x, cfg.paths, FS), cfg.sfo_ppm)
    z = apply_cfo(z, cfg.cfo_hz, FS, cfg.cpo_rad)
    assert not np.allclose(z, y[: z.size])


def test_zero_channel_is_identity():
    x = smooth_signal(2000, seed=4)
    cfg = ChannelConfig()
    assert cfg.is_identity
    np.testing.assert_allclose(apply_channel(x, cfg, FS).samples, x, atol=1e-12)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ChannelConfig(paths=())
    with pytest.raises(ConfigurationError):
        ChannelConfig(paths=(PathSpec(gain=0.5), PathSpec(gain=1.0)))
    with pytest.raises(ConfigurationError):
        ChannelConfig(sfo_ppm=1000)
    with pytest.raises(ConfigurationError):
        PathSpec(delay_s=-1e-9)
    with pytest.raises(ConfigurationError):
        ChannelConfig(cfo_hz=6e8).check_rate(FS)


def test_sfo_round_trip_band_limited():
    x = smooth_signal(20000)
    y = correct_sfo(apply_sfo(x, 100), 100, n_out=x.size)
    err = np.abs(y - x)[8:-8] / np.sqrt(np.mean(np.abs(x) ** 2))
    assert err.max() < 1e-3


def test_sfo_round_trip_keeps_peaks_still():
    plan = preset("pmcw1s").with_blocks(40)
    seqs = sequence_set(plan.n, plan.n_sc)
    fr = assemble_frame(plan, seqs, np.zeros(plan.data_bits, np.uint8))
    y = correct_sfo(apply_sfo(fr.samples, 100), 100, n_out=fr.samples.size)
    pay = y[plan.preamble_len:].reshape(plan.m, plan.a, plan.n)[:, 1:, :].sum(axis=1)
    d = phase_slope_delays(pay, seqs[2])
    assert np.max(np.abs(d)) < 0.1
    # without the correction the drift is plainly visible
    y = apply_sfo(fr.samples, 100)[: fr.samples.size]
    pay = y[plan.preamble_len:].reshape(plan.m, plan.a, plan.n)[:, 1:, :].sum(axis=1)
    assert abs(phase_slope_delays(pay, seqs[2])[-1]) > 1.0


@given(st.floats(-300, 300), st.integers(0, 2 ** 16))
def test_sfo_round_trip_property(ppm, seed):
    x = smooth_signal(3000, bw=0.15, seed=seed)
    y = correct_sfo(apply_sfo(x, ppm), ppm, n_out=x.size)
    err = np.abs(y - x)[8:-8] / np.sqrt(np.mean(np.abs(x) ** 2))
    assert err.max() < 1e-3


@given(st.floats(0, 40), st.floats(-np.pi, np.pi))
def test_delay_property_preserves_tone(d, ph):
    n = np.arange(400)
    x = np.exp(1j * (2 * np.pi * 0.05 * n + ph))
    y = interp.delay(x, d)
    k = np.arange(int(np.ceil(d)) + 40, 360)
    np.testing.assert_allclose(y[k], np.exp(1j * (2 * np.pi * 0.05 * (k - d) + ph)), atol=2e-3)
