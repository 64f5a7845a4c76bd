"""Binary sample and map containers.

I/Q file: 8-byte magic ``PMCWIQ1\\0``, little-endian u64 sample count, then
interleaved little-endian float32 (I, Q). A JSON sidecar (``<path>.json``)
holds the sample rate and scenario hash.

Range-Doppler file: magic ``PMCWRDM\\0``, u32 rows, u32 cols, f64 range bin
width, f64 velocity bin width, f64 velocity of column 0, then row-major
float32 magnitudes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IqFormatError

IQ_MAGIC = b"PMCWIQ1\0"
RDM_MAGIC = b"PMCWRDM\0"
_IQ_HEAD = struct.Struct("<8sQ")
_RDM_HEAD = struct.Struct("<8sIIddd")


@dataclass(frozen=True, eq=False)
class IqBuffer:
    samples: np.ndarray = field(repr=False)
    fs: float = 1e9
    scenario: str = ""


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def write_iq(path, buf: IqBuffer) -> None:
    x = np.asarray(buf.samples, dtype=np.complex64)
    inter = np.empty(2 * x.size, dtype="<f4")
    inter[0::2] = x.real
    inter[1::2] = x.imag
    with open(path, "wb") as f:
        f.write(_IQ_HEAD.pack(IQ_MAGIC, x.size))
        f.write(inter.tobytes())
    meta = {"sample_rate_hz": buf.fs, "scenario": buf.scenario, "samples": int(x.size),
            "format": "interleaved float32 I/Q, little-endian"}
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_iq(path) -> IqBuffer:
    raw = Path(path).read_bytes()
    if len(raw) < _IQ_HEAD.size:
        raise IqFormatError(f"{path}: header needs {_IQ_HEAD.size} bytes, file has {len(raw)}")
    magic, count = _IQ_HEAD.unpack_from(raw)
    if magic != IQ_MAGIC:
        raise IqFormatError(f"{path}: bad magic {magic!r}")
    have = (len(raw) - _IQ_HEAD.size) // 8
    if have != count or (len(raw) - _IQ_HEAD.size) % 8:
        raise IqFormatError(f"{path}: header declares {count} samples, payload holds {have}")
    v = np.frombuffer(raw, dtype="<f4", offset=_IQ_HEAD.size)
    x = (v[0::2] + 1j * v[1::2]).astype(np.complex64)
    fs, scn = 1e9, ""
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        fs = float(meta.get("sample_rate_hz", fs))
        scn = str(meta.get("scenario", ""))
    return IqBuffer(x, fs, scn)


def write_rdmap(path, magnitude: np.ndarray, range_res: float, vel_res: float, vel_min: float) -> None:
    mag = np.ascontiguousarray(magnitude, dtype="<f4")
    rows, cols = mag.shape
    with open(path, "wb") as f:
        f.write(_RDM_HEAD.pack(RDM_MAGIC, rows, cols, range_res, vel_res, vel_min))
        f.write(mag.tobytes())


def read_rdmap(path):
    """-> (magnitude, range_res, vel_res, vel_min)"""
    raw = Path(path).read_bytes()
    if len(raw) < _RDM_HEAD.size:
        raise IqFormatError(f"{path}: truncated header")
    magic, rows, cols, rr, vr, vmin = _RDM_HEAD.unpack_from(raw)
    if magic != RDM_MAGIC:
        raise IqFormatError(f"{path}: bad magic {magic!r}")
    need = rows * cols * 4
    if len(raw) - _RDM_HEAD.size != need:
        raise IqFormatError(f"{path}: expected {need} payload bytes, found {len(raw) - _RDM_HEAD.size}")
    mag = np.frombuffer(raw, dtype="<f4", offset=_RDM_HEAD.size).reshape(rows, cols)
    return mag, rr, vr, vmin
