"""Maximum-length sequences from Fibonacci LFSRs and the correlation helpers
used by every receive path.

Register convention: stages are numbered 1..m, the output is read from
stage m, the feedback (XOR of the tapped stages) enters stage 1. Output bit
0 maps to chip +1 and bit 1 to chip -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

# Two primitive polynomials per degree, given as exponent sets. The pairs were
# picked for a low peak circular cross-correlation so that the two S&C blocks
# stay quasi-orthogonal. The first entry is also the payload polynomial.
PRIMITIVE_TAPS: dict[int, tuple[tuple[int, ...], ...]] = {
    2: ((2, 1),),
    3: ((3, 2), (3, 1)),
    4: ((4, 3), (4, 1)),
    5: ((5, 2), (5, 3, 2, 1)),
    6: ((6, 5), (6, 1)),
    7: ((7, 1), (7, 3)),
    8: ((8, 4, 3, 2), (8, 5, 3, 2)),
    9: ((9, 4), (9, 4, 3, 1)),
    10: ((10, 3), (10, 7)),
    11: ((11, 2), (11, 5, 3, 1)),
}

# brute-force primitivity check is only attempted up to this degree
_MAX_CHECK_DEGREE = 20


def degree_of(length: int) -> int:
    """Return m such that ``length == 2**m - 1``; raise otherwise."""
    m = int(length + 1).bit_length() - 1
    if m < 2 or (1 << m) - 1 != length:
        raise ConfigurationError(f"length {length} is not of the form 2^m - 1 with m >= 2")
    return m


def _period(degree: int, taps: tuple[int, ...], seed: int) -> int:
    mask = (1 << degree) - 1
    state = seed
    for n in range(1, (1 << degree) + 1):
        fb = 0
        for t in taps:
            fb ^= (state >> (t - 1)) & 1
        state = ((state << 1) | fb) & mask
        if state == seed:
            return n
    return 0


@lru_cache(maxsize=None)
def is_primitive(degree: int, taps: tuple[int, ...]) -> bool:
    if taps in PRIMITIVE_TAPS.get(degree, ()):
        return True
    if degree > _MAX_CHECK_DEGREE:
        return False
    return _period(degree, taps, 1) == (1 << degree) - 1


@dataclass(frozen=True)
class LfsrSpec:
    degree: int
    taps: tuple[int, ...]
    seed: int | None = None  # None -> all-ones

    def __post_init__(self):
        if self.degree < 2:
            raise ConfigurationError(f"LFSR degree must be >= 2, got {self.degree}")
        taps = tuple(sorted({int(t) for t in self.taps}, reverse=True))
        object.__setattr__(self, "taps", taps)
        if not taps or taps[0] != self.degree or taps[-1] < 1:
            raise ConfigurationError(
                f"taps {taps} must include the degree {self.degree} and lie in 1..{self.degree}"
            )
        seed = (1 << self.degree) - 1 if self.seed is None else int(self.seed)
        if seed == 0:
            raise ConfigurationError("LFSR seed must be nonzero")
        if seed >> self.degree:
            raise ConfigurationError(f"seed {seed:#x} does not fit in {self.degree} bits")
        object.__setattr__(self, "seed", seed)
        if not is_primitive(self.degree, taps):
            raise ConfigurationError(
                f"taps {taps} do not form a primitive polynomial of degree {self.degree}"
            )

    @property
    def length(self) -> int:
        return (1 << self.degree) - 1

    @classmethod
    def builtin(cls, degree: int, index: int = 0, seed: int | None = None) -> "LfsrSpec":
        try:
            taps = PRIMITIVE_TAPS[degree][index]
        except (KeyError, IndexError):
            raise ConfigurationError(
                f"no built-in primitive polynomial #{index} for degree {degree}"
            ) from None
        return cls(degree, taps, seed)


@dataclass(frozen=True, eq=False)
class ChipSequence:
    chips: np.ndarray = field(repr=False)
    spec: LfsrSpec

    def __post_init__(self):
        self.chips.setflags(write=False)

    def __len__(self) -> int:
        return len(self.chips)

    @property
    def bits(self) -> np.ndarray:
        return ((1 - self.chips) // 2).astype(np.uint8)


@lru_cache(maxsize=64)
def _register_bits(degree: int, taps: tuple[int, ...], seed: int) -> bytes:
    # stage k lives in bit k-1 of the integer state
    n = (1 << degree) - 1
    out = bytearray(n)
    state = seed
    mask = (1 << degree) - 1
    top = degree - 1
    tap_shifts = [t - 1 for t in taps]
    for i in range(n):
        out[i] = (state >> top) & 1
        fb = 0
        for s in tap_shifts:
            fb ^= (state >> s) & 1
        state = ((state << 1) | fb) & mask
    return bytes(out)


def generate_mls(spec: LfsrSpec) -> ChipSequence:
    """Clock the register 2^m - 1 times and map the output bits to +/-1 chips."""
    bits = np.frombuffer(_register_bits(spec.degree, spec.taps, spec.seed), dtype=np.uint8)
    chips = 1 - 2 * bits.astype(np.int8)
    return ChipSequence(chips, spec)


def _as_array(a) -> np.ndarray:
    return a.chips if isinstance(a, ChipSequence) else np.asarray(a)


def circular_correlate(a, b) -> np.ndarray:
    """out[l] = sum_k a[(k + l) mod L] * conj(b[k]) via a length-L DFT.

    Works along the last axis, so ``a`` may be a stack of rows.
    """
    a = _as_array(a)
    b = _as_array(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    out = np.fft.ifft(np.fft.fft(a, axis=-1) * np.conj(np.fft.fft(b)), axis=-1)
    if not (np.iscomplexobj(a) or np.iscomplexobj(b)):
        return out.real
    return out


def cross_correlation_bound(a, b) -> float:
    """Peak |circular cross-correlation| over all lags, normalized by N."""
    a = _as_array(a)
    b = _as_array(b)
    corr = circular_correlate(a.astype(float), b.astype(float))
    return float(np.max(np.abs(corr)) / len(a))


def sequence_set(payload_length: int, sc_length: int) -> tuple[ChipSequence, ChipSequence, ChipSequence]:
    """The three register outputs a frame needs: S&C block 1, S&C block 2, payload."""
    m_sc = degree_of(sc_length)
    seq1 = generate_mls(LfsrSpec.builtin(m_sc, 0))
    seq2 = generate_mls(LfsrSpec.builtin(m_sc, 1))
    payload = generate_mls(LfsrSpec.builtin(degree_of(payload_length), 0))
    return seq1, seq2, payload
