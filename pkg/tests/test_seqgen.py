import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmcw_radcom.errors import ConfigurationError
from pmcw_radcom.seqgen import (PRIMITIVE_TAPS, LfsrSpec, circular_correlate,
                                cross_correlation_bound, degree_of, generate_mls,
                                is_primitive, sequence_set)


def brute_correlate(a, b):
    n = len(a)
    return np.array([sum(a[(k + l) % n] * np.conj(b[k]) for k in range(n)) for l in range(n)])


def hand_register(degree, taps, seed, clocks):
    """Stage list [s1..sm]; output stage m, feedback XOR of taps into stage 1."""
    stages = [(seed >> i) & 1 for i in range(degree)]
    out = []
    for _ in range(clocks):
        out.append(stages[-1])
        fb = 0
        for t in taps:
            fb ^= stages[t - 1]
        stages = [fb] + stages[:-1]
    return out


def test_degree3_hand_simulation():
    spec = LfsrSpec(3, (3, 2))
    seq = generate_mls(spec)
    bits = hand_register(3, (3, 2), 0b111, 7)
    assert bits == [1, 1, 1, 0, 0, 1, 0]
    assert list(seq.bits) == bits
    assert list(seq.chips) == [-1, -1, -1, 1, 1, -1, 1]
    assert np.count_nonzero(seq.chips == -1) == 4


@pytest.mark.parametrize("degree", sorted(PRIMITIVE_TAPS))
def test_builtin_table_properties(degree):
    for idx in range(len(PRIMITIVE_TAPS[degree])):
        seq = generate_mls(LfsrSpec.builtin(degree, idx))
        n = 2 ** degree - 1
        assert len(seq) == n
        assert np.count_nonzero(seq.chips == -1) == np.count_nonzero(seq.chips == 1) + 1
        ac = circular_correlate(seq.chips, seq.chips)
        assert ac[0] == pytest.approx(n)
        np.testing.assert_allclose(ac[1:], -1.0, atol=1e-9)


def test_length_255():
    assert len(generate_mls(LfsrSpec.builtin(8))) == 255


def test_degree7_autocorrelation_matches_brute_force():
    seq = generate_mls(LfsrSpec.builtin(7, 1))
    ref = brute_correlate(seq.chips.astype(float), seq.chips.astype(float))
    assert ref[0] == 127 and np.all(ref[1:] == -1)
    np.testing.assert_allclose(circular_correlate(seq.chips, seq.chips), ref, atol=1e-9)


def test_table_matches_period_search():
    for degree, pair in PRIMITIVE_TAPS.items():
        for taps in pair:
            spec = LfsrSpec(degree, taps)
            bits = hand_register(degree, taps, spec.seed, 2 ** degree - 1)
            assert bits == list(generate_mls(spec).bits)


def test_rejects_bad_specs():
    with pytest.raises(ConfigurationError):
        LfsrSpec(4, (4, 2))  # x^4 + x^2 + 1 is not primitive
    with pytest.raises(ConfigurationError):
        LfsrSpec(3, (3, 2), seed=0)
    with pytest.raises(ConfigurationError):
        LfsrSpec(3, (3, 2), seed=8)
    with pytest.raises(ConfigurationError):
        LfsrSpec(3, (2, 1))
    with pytest.raises(ConfigurationError):
        LfsrSpec.builtin(12)
    assert not is_primitive(4, (4, 2))
    assert is_primitive(12, (12, 6, 4, 1))  # outside the table, found by period search


def test_degree_of():
    assert degree_of(255) == 8
    with pytest.raises(ConfigurationError):
        degree_of(256)


def test_correlate_examples():
    np.testing.assert_allclose(circular_correlate(np.ones(4), np.ones(4)), [4, 4, 4, 4])
    seq = generate_mls(LfsrSpec.builtin(8)).chips.astype(float)
    c = circular_correlate(np.roll(seq, 3), seq)
    assert int(np.argmax(c)) == 3 and c[3] == pytest.approx(255)
    with pytest.raises(ValueError):
        circular_correlate(np.ones(4), np.ones(5))


@pytest.mark.parametrize("length", [7, 31, 127])
def test_fft_correlation_matches_double_loop(length):
    rng = np.random.default_rng(length)
    a = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    b = generate_mls(LfsrSpec.builtin(length.bit_length())).chips.astype(float)
    ref = brute_correlate(a, b)
    got = circular_correlate(a, b)
    assert np.max(np.abs(got - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_cross_correlation_bound():
    s1, s2, _ = sequence_set(255, 127)
    assert cross_correlation_bound(s1, s1) == pytest.approx(1.0)
    brute = np.max(np.abs(brute_correlate(s1.chips.astype(float), s2.chips.astype(float)))) / 127
    assert cross_correlation_bound(s1, s2) == pytest.approx(brute)
    assert brute <= 0.18
    ones = np.ones(127)
    assert cross_correlation_bound(ones, s1) == pytest.approx(1 / 127)


def test_sequence_set_uses_three_registers():
    s1, s2, pay = sequence_set(511, 255)
    assert len({s1.spec, s2.spec, pay.spec}) == 3
    assert len(s1) == len(s2) == 255 and len(pay) == 511


@given(st.sampled_from(sorted(PRIMITIVE_TAPS)), st.integers(0, 1), st.data())
def test_any_seed_gives_a_rotation(degree, idx, data):
    if idx >= len(PRIMITIVE_TAPS[degree]):
        idx = 0
    seed = data.draw(st.integers(1, 2 ** degree - 1))
    base = generate_mls(LfsrSpec.builtin(degree, idx)).chips
    seq = generate_mls(LfsrSpec.builtin(degree, idx, seed)).chips
    # every nonzero state lies on the single maximal cycle
    c = circular_correlate(seq, base)
    assert np.isclose(np.max(c), len(seq))
    assert np.array_equal(generate_mls(LfsrSpec.builtin(degree, idx, seed)).chips, seq)


@given(st.integers(2, 9).map(lambda m: 2 ** m - 1), st.integers(0, 2 ** 32 - 1))
def test_correlation_is_shift_covariant(n, s):
    rng = np.random.default_rng(s)
    a = rng.standard_normal(n)
    b = rng.choice([-1.0, 1.0], n)
    sh = int(rng.integers(n))
    np.testing.assert_allclose(circular_correlate(np.roll(a, sh), b),
                               np.roll(circular_correlate(a, b), sh), atol=1e-9)
