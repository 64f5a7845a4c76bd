import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmcw_radcom.impairments import ChannelConfig, PathSpec, apply_channel, noise_rng
from pmcw_radcom.radarproc import (Target, detect, echo_channel, integration_gain_db,
                                   range_doppler, range_profiles)
from pmcw_radcom.seqgen import sequence_set
from pmcw_radcom.sysparams import SPEED_OF_LIGHT, derive_parameters, preset
from pmcw_radcom.txframe import assemble_frame, random_bits


def echo(plan, cfg, seed=1):
    seqs = sequence_set(plan.n, plan.n_sc)
    frame = assemble_frame(plan, seqs, random_bits(plan.data_bits, np.random.default_rng(seed)))
    y = apply_channel(frame.samples, cfg, plan.fs).samples
    pay = y[plan.preamble_len: plan.preamble_len + plan.payload_len]
    return range_profiles(pay, plan, seqs[2], frame.symbols)


def test_target_conversions():
    t = Target(15.0, 20.0)
    assert t.delay_s() == pytest.approx(2 * 15 / SPEED_OF_LIGHT)
    assert t.doppler_hz(79e9) == pytest.approx(2 * 20 * 79e9 / SPEED_OF_LIGHT)
    with pytest.raises(ValueError):
        echo_channel([], preset("pmcw1s"))


def test_integer_delay_bin():
    plan = preset("pmcw1s").with_blocks(16)
    prof = echo(plan, ChannelConfig(paths=(PathSpec(delay_s=100 / plan.fs),)))
    assert prof.shape == (plan.n, plan.m)
    assert np.all(np.argmax(np.abs(prof), axis=0) == 100)


def test_delay_beyond_block_wraps():
    plan = preset("pmcw1s").with_blocks(16)
    prof = echo(plan, ChannelConfig(paths=(PathSpec(delay_s=(plan.n + 20) / plan.fs),)))
    assert np.all(np.argmax(np.abs(prof[:, 1:]), axis=0) == 20)


def test_zero_input():
    plan = preset("pmcw1s").with_blocks(8)
    ref = sequence_set(plan.n, plan.n_sc)[2]
    prof = range_profiles(np.zeros(plan.payload_len), plan, ref)
    assert not prof.any()
    assert detect(range_doppler(prof, plan)) == []


def test_static_target_center_bin():
    plan = preset("pmcw1s").with_blocks(64)
    rdm = range_doppler(echo(plan, ChannelConfig(paths=(PathSpec(delay_s=30 / plan.fs),))), plan)
    i, j = np.unravel_index(np.argmax(rdm.power), rdm.shape)
    assert (i, j) == (30, plan.m // 2)
    assert rdm.velocity_axis[j] == 0.0


def test_doppler_sixteen_bins():
    plan = preset("pmcw1s").with_blocks(128)
    fd = 16 * plan.fs / (plan.block_len * plan.m)
    rdm = range_doppler(echo(plan, ChannelConfig(paths=(PathSpec(0.0, 1.0, fd),))), plan)
    i, j = np.unravel_index(np.argmax(rdm.power), rdm.shape)
    assert (i, j) == (0, plan.m // 2 + 16)
    assert rdm.velocity_axis[j] == pytest.approx(16 * derive_parameters(plan).vel_res_mps)


def test_axes_match_parameters_pmcw1():
    plan = preset("pmcw1")
    rep = derive_parameters(plan)
    rdm = range_doppler(np.zeros((plan.n, plan.m), complex), plan)
    assert rdm.range_res == rep.range_res_m and rdm.vel_res == rep.vel_res_mps
    np.testing.assert_array_equal(rdm.range_axis, np.arange(plan.n) * rep.range_res_m)
    np.testing.assert_array_equal(rdm.velocity_axis, (np.arange(plan.m) - plan.m // 2) * rep.vel_res_mps)
    assert round(rep.vel_res_mps, 2) == 0.18
    assert round(-rdm.velocity_axis[0], 2) == 744.09
    assert round(rep.max_velocity_mps, 2) == 744.09
    assert rdm.range_axis[-1] < rep.max_range_m


@pytest.fixture(scope="module")
def single_target():
    plan = preset("pmcw1s")
    tgt = Target(15.0, 20.0)
    rdm = range_doppler(echo(plan, echo_channel([tgt], plan, snr_db=-10, seed=3)), plan)
    return plan, tgt, rdm


def test_single_target_detection(single_target):
    plan, tgt, rdm = single_target
    dets = detect(rdm, threshold_db=40)
    assert len(dets) == 1
    d = dets[0]
    assert abs(d.range_m - tgt.range_m) <= rdm.range_res
    assert abs(d.velocity_mps - tgt.velocity_mps) <= rdm.vel_res
    assert 0 <= d.range_m < derive_parameters(plan).max_range_m
    # the strongest detection at the default threshold is the same cell
    assert detect(rdm)[0].range_bin == d.range_bin


def test_integration_gain(single_target):
    plan, _, rdm = single_target
    d = detect(rdm, 40)[0]
    g = integration_gain_db(rdm, d.range_bin, d.velocity_bin, -10.0)
    assert g == pytest.approx(10 * np.log10(plan.n * (plan.a - 1) * plan.m), abs=1.0)


def test_two_targets():
    plan = preset("pmcw1s").with_blocks(256)
    rep = derive_parameters(plan)
    t1 = Target(30 * rep.range_res_m, 40 * rep.vel_res_mps)
    t2 = Target(32 * rep.range_res_m, 42 * rep.vel_res_mps, 0.9)
    rdm = range_doppler(echo(plan, echo_channel([t1, t2], plan, snr_db=-10, seed=2)), plan)
    dets = detect(rdm, 30)
    assert len(dets) == 2
    got = sorted((d.range_bin, d.velocity_bin) for d in dets)
    assert got == [(30, plan.m // 2 + 40), (32, plan.m // 2 + 42)]


def noise_profiles(plan, seed):
    g = noise_rng(seed, 0)
    return g.standard_normal((plan.n, plan.m)) + 1j * g.standard_normal((plan.n, plan.m))


def test_noise_only_false_alarms():
    plan = preset("pmcw1s")
    counts = [len(detect(range_doppler(noise_profiles(plan, s), plan), 13)) for s in range(20)]
    assert sum(counts) == 7  # frozen Monte Carlo statistic
    # exponential cell power: P(cell > 10^1.3 x median) = 2^(-10^1.3)
    expected = 20 * plan.n * plan.m * 2.0 ** (-10 ** 1.3)
    assert sum(counts) < expected + 4 * np.sqrt(expected) + 3


@given(st.integers(0, 2 ** 16))
@settings(max_examples=10)
def test_parseval(seed):
    plan = preset("pmcw1s").with_blocks(64)
    prof = noise_profiles(plan, seed)
    rdm = range_doppler(prof, plan)
    assert np.sum(rdm.power) / plan.m == pytest.approx(np.sum(np.abs(prof) ** 2), rel=1e-6)


def test_window_option():
    plan = preset("pmcw1s").with_blocks(64)
    prof = noise_profiles(plan, 0)
    a = range_doppler(prof, plan)
    b = range_doppler(prof, plan, window="hann")
    assert a.shape == b.shape and not np.allclose(a.cmap, b.cmap)
