"""Transmit frame assembly: S&C preamble, SFO preamble, BPSK payload with pilots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .seqgen import ChipSequence
from .sysparams import FramePlan


def pilot_indices(m: int, spacing: int) -> np.ndarray:
    return np.arange(0, m, spacing)


def bpsk(bits) -> np.ndarray:
    """bit 0 -> +1, bit 1 -> -1"""
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


@dataclass(frozen=True)
class FrameLayout:
    sc1: tuple[int, int]  # (offset, length)
    sc2: tuple[int, int]
    sfo: tuple[int, int]
    payload: tuple[int, int]
    block_len: int
    pilots: np.ndarray = field(repr=False)

    @classmethod
    def from_plan(cls, plan: FramePlan) -> "FrameLayout":
        b = 3 * plan.n_sc
        sfo_off = 2 * b
        pay_off = sfo_off + plan.sfo_len
        return cls(
            sc1=(0, b),
            sc2=(b, b),
            sfo=(sfo_off, plan.sfo_len),
            payload=(pay_off, plan.payload_len),
            block_len=plan.block_len,
            pilots=pilot_indices(plan.m, plan.pilot_spacing),
        )

    def block(self, k: int) -> tuple[int, int]:
        return self.payload[0] + k * self.block_len, self.block_len

    @property
    def total(self) -> int:
        return self.payload[0] + self.payload[1]


@dataclass(frozen=True, eq=False)
class TxFrame:
    samples: np.ndarray = field(repr=False)
    layout: FrameLayout
    sequences: tuple[ChipSequence, ChipSequence, ChipSequence]
    bits: np.ndarray = field(repr=False)
    symbols: np.ndarray = field(repr=False)  # per block, pilots included
    fs: float = 1e9


def build_sc_preamble(seq1: ChipSequence, seq2: ChipSequence) -> np.ndarray:
    if len(seq1) != len(seq2):
        raise ConfigurationError("S&C sequences must have equal length")
    if seq1.spec == seq2.spec or np.array_equal(seq1.chips, seq2.chips):
        raise ConfigurationError(
            "S&C blocks need two distinct registers, otherwise the two plateaus merge"
        )
    return np.concatenate([np.tile(seq1.chips, 3), np.tile(seq2.chips, 3)]).astype(float)


def build_sfo_preamble(seq: ChipSequence, m_sfo: int) -> np.ndarray:
    """One CP copy followed by (m_sfo - 1) / 2 identical pairs."""
    if m_sfo < 3 or m_sfo % 2 == 0:
        raise ConfigurationError(f"M_SFO must be odd and >= 3, got {m_sfo}")
    return np.tile(seq.chips, m_sfo).astype(float)


def block_symbols(bits, plan: FramePlan) -> np.ndarray:
    bits = np.asarray(bits)
    expected = plan.data_bits
    if bits.size != expected:
        raise ValueError(f"payload needs exactly {expected} data bits, got {bits.size}")
    symbols = np.ones(plan.m)
    is_pilot = np.zeros(plan.m, dtype=bool)
    is_pilot[pilot_indices(plan.m, plan.pilot_spacing)] = True
    symbols[~is_pilot] = bpsk(bits)
    return symbols


def build_payload(seq: ChipSequence, bits, plan: FramePlan) -> np.ndarray:
    if len(seq) != plan.n:
        raise ConfigurationError(f"payload sequence length {len(seq)} != N={plan.n}")
    symbols = block_symbols(bits, plan)
    block = np.tile(seq.chips.astype(float), plan.a)
    return (symbols[:, None] * block[None, :]).ravel()


def assemble_frame(plan: FramePlan, seqs, bits) -> TxFrame:
    seq1, seq2, pay = seqs
    if len(seq1) != plan.n_sc:
        raise ConfigurationError(f"S&C sequence length {len(seq1)} != N_S&C={plan.n_sc}")
    bits = np.asarray(bits, dtype=np.uint8)
    parts = [
        build_sc_preamble(seq1, seq2),
        build_sfo_preamble(pay, plan.m_sfo),
        build_payload(pay, bits, plan),
    ]
    samples = np.concatenate(parts).astype(np.complex128)
    layout = FrameLayout.from_plan(plan)
    assert samples.size == layout.total
    return TxFrame(samples, layout, (seq1, seq2, pay), bits, block_symbols(bits, plan), plan.fs)


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)
