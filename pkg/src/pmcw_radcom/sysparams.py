"""Frame geometry and the communication/radar figures it implies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0


def _is_mls_length(n: int) -> bool:
    return n >= 3 and (n + 1) & n == 0


def validate_s_and_c_length(n: int) -> int:
    """S&C sequence length for payload length ``n``: (n + 1) / 2 - 1."""
    if not _is_mls_length(n) or n < 7:
        raise ConfigurationError(f"N={n} is not an MLS length 2^m - 1 with m >= 3")
    n_sc = (n + 1) // 2 - 1
    assert _is_mls_length(n_sc)
    return n_sc


@dataclass(frozen=True)
class FramePlan:
    n: int  # payload PRBS length (chips)
    a: int  # PRBS repetitions per block, the first acts as CP
    m: int  # payload + pilot blocks
    n_sc: int
    m_sfo: int
    pilot_spacing: int
    fs: float = 1e9
    fc: float = 79e9
    name: str = "custom"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not _is_mls_length(self.n):
            raise ConfigurationError(f"N={self.n} must be of the form 2^m - 1")
        if not _is_mls_length(self.n_sc):
            raise ConfigurationError(f"N_S&C={self.n_sc} must be of the form 2^m - 1")
        if self.n_sc != (self.n + 1) // 2 - 1:
            raise ConfigurationError(
                f"N_S&C must equal (N+1)/2 - 1 = {(self.n + 1) // 2 - 1}, got {self.n_sc}"
            )
        if self.m_sfo < 3 or self.m_sfo % 2 == 0:
            raise ConfigurationError(f"M_SFO must be odd and >= 3, got {self.m_sfo}")
        if self.a < 2:
            raise ConfigurationError(f"A must be >= 2, got {self.a}")
        if self.pilot_spacing < 1:
            raise ConfigurationError(f"pilot spacing must be >= 1, got {self.pilot_spacing}")
        if self.m < self.pilot_spacing:
            raise ConfigurationError(
                f"M={self.m} must be >= pilot spacing {self.pilot_spacing}"
            )
        if self.fs <= 0 or self.fc <= 0:
            raise ConfigurationError("sample rate and carrier frequency must be positive")

    @property
    def block_len(self) -> int:
        return self.n * self.a

    @property
    def sc_len(self) -> int:
        return 6 * self.n_sc

    @property
    def sfo_len(self) -> int:
        return self.m_sfo * self.n

    @property
    def preamble_len(self) -> int:
        return self.sc_len + self.sfo_len

    @property
    def payload_len(self) -> int:
        return self.block_len * self.m

    @property
    def frame_len(self) -> int:
        return self.preamble_len + self.payload_len

    @property
    def pilot_count(self) -> int:
        return -(-self.m // self.pilot_spacing)

    @property
    def data_bits(self) -> int:
        return self.m - self.pilot_count

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    def with_blocks(self, m: int) -> "FramePlan":
        return replace(self, m=m)


@dataclass(frozen=True)
class PerformanceReport:
    comm_gain_db: float
    max_delay_s: float
    max_doppler_hz: float
    data_rate_bps: float
    radar_gain_db: float
    range_res_m: float
    max_range_m: float
    vel_res_mps: float
    max_velocity_mps: float
    dwell_s: float
    pilot_count: int
    payload_bits: int

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.field_names()}

    def to_text(self, config_id: str = "") -> str:
        lines = [f"config = {config_id}"] if config_id else []
        lines += [f"{k} = {v!r}" for k, v in self.as_dict().items()]
        return "\n".join(lines) + "\n"

    def to_csv_row(self, config_id: str) -> list:
        return [config_id] + [getattr(self, k) for k in self.field_names()]


CSV_HEADER = ["config"] + PerformanceReport.field_names()

# (label, field, scale, unit) in the units the measurement table is printed in
PRINTED_ROWS = [
    ("Comm. process. gain", "comm_gain_db", 1.0, "dB"),
    ("Maximum delay", "max_delay_s", 1e6, "us"),
    ("Max. Doppler shift", "max_doppler_hz", 1e-3, "kHz"),
    ("Data rate", "data_rate_bps", 1e-3, "kbit/s"),
    ("Radar process. gain", "radar_gain_db", 1.0, "dB"),
    ("Range resolution", "range_res_m", 1.0, "m"),
    ("Max. unamb. range", "max_range_m", 1.0, "m"),
    ("Velocity resolution", "vel_res_mps", 1.0, "m/s"),
    ("Max. unamb. velocity", "max_velocity_mps", 1.0, "m/s"),
]


def printed_values(rep: PerformanceReport) -> dict[str, float]:
    """Report figures in printed units, rounded to two decimals."""
    return {f: round(getattr(rep, f) * k, 2) for _, f, k, _ in PRINTED_ROWS}


def format_table(named: list[tuple[str, PerformanceReport]]) -> str:
    width = max(len(r[0]) for r in PRINTED_ROWS) + 9
    lines = [" " * width + "".join(f"{cid:>12}" for cid, _ in named)]
    for label, f, k, unit in PRINTED_ROWS:
        cells = "".join(f"{getattr(rep, f) * k:12.2f}" for _, rep in named)
        lines.append(f"{label + ' [' + unit + ']':<{width}}{cells}")
    return "\n".join(lines) + "\n"


def derive_parameters(plan: FramePlan) -> PerformanceReport:
    plan.validate()
    c = SPEED_OF_LIGHT
    n, a, m, fs = plan.n, plan.a, plan.m, plan.fs
    wavelength = c / plan.fc
    t_block = n * a / fs
    dwell = (6 * plan.n_sc + plan.m_sfo * n + n * a * m) / fs
    pilots = plan.pilot_count
    return PerformanceReport(
        comm_gain_db=10 * math.log10(n * (a - 1)),
        max_delay_s=n / fs,
        max_doppler_hz=1.0 / (2 * t_block * plan.pilot_spacing),
        data_rate_bps=(m - pilots) / dwell,
        radar_gain_db=10 * math.log10(n * (a - 1) * m),
        range_res_m=c / (2 * fs),
        max_range_m=n * c / (2 * fs),
        vel_res_mps=wavelength / (2 * m * n * a / fs),
        max_velocity_mps=wavelength / (4 * n * a / fs),
        dwell_s=dwell,
        pilot_count=pilots,
        payload_bits=m - pilots,
    )


def reports_to_csv(rows: list[tuple[str, PerformanceReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for cid, rep in rows:
        w.writerow([cid] + [repr(v) if isinstance(v, float) else v for v in rep.as_dict().values()])
    return buf.getvalue()


def _preset(name, n, m):
    return FramePlan(n=n, a=5, m=m, n_sc=(n + 1) // 2 - 1, m_sfo=21, pilot_spacing=5,
                     fs=1e9, fc=79e9, name=name)


# Measurement configurations; the "s" variants cut M by 8x for quick runs.
PRESETS: dict[str, FramePlan] = {
    "pmcw1": _preset("pmcw1", 255, 8192),
    "pmcw2": _preset("pmcw2", 511, 4096),
    "pmcw3": _preset("pmcw3", 1023, 2048),
    "pmcw4": _preset("pmcw4", 2047, 1024),
}
DESK_SCALE = 8
PRESETS.update({
    f"{k}s": replace(v, m=v.m // DESK_SCALE, name=f"{k}s") for k, v in list(PRESETS.items())
})


def preset(name: str) -> FramePlan:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"
        ) from None
