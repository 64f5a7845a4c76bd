"""Scenario configuration, per-trial execution and artifact writing.

A scenario is read from a flat INI file (sections ``plan``, ``channel``,
``receiver``, ``run``, ``targets``, ``sweep``). Every resolved value, defaults
included, goes into ``manifest.json``.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, interp
from .acquisition import SyncConfig, synchronize
from .commdemod import DemodOptions, demodulate
from .errors import AcquisitionError, ConfigurationError
from .impairments import ChannelConfig, PathSpec, apply_cfo, apply_channel, noise_rng
from .iqfile import IqBuffer, write_iq, write_rdmap
from .radarproc import (Target, detect, echo_channel, integration_gain_db,
                        range_doppler, range_profiles)
from .seqgen import sequence_set
from .sysparams import FramePlan, derive_parameters, preset, reports_to_csv
from .txframe import assemble_frame, random_bits

log = logging.getLogger("pmcw_radcom")

MODES = ("comm", "radar", "loopback")

# documented keys, listed in ``pmcw-lab <command> --help``
CONFIG_KEYS = {
    "plan": {
        "preset": "built-in plan to start from (pmcw1..pmcw4, pmcw1s..pmcw4s)",
        "n": "payload PRBS length, 2^m - 1",
        "a": "PRBS repetitions per block (first is the cyclic prefix)",
        "m": "number of payload + pilot blocks",
        "n_sc": "S&C PRBS length, (n + 1) / 2 - 1",
        "m_sfo": "PRBS copies in the SFO preamble (odd)",
        "pilot_spacing": "blocks between pilots",
        "fs": "sample rate [Hz]",
        "fc": "carrier frequency [Hz], only used for Doppler <-> velocity",
    },
    "channel": {
        "paths": "comma separated delay_s:gain_re:gain_im:doppler_hz, main path first",
        "sto": "timing offset [samples]",
        "cfo_hz": "carrier frequency offset [Hz]",
        "sfo_ppm": "sampling frequency offset [ppm]",
        "snr_db": "per-sample SNR at the receiver input (inf = noiseless)",
        "cpo_rad": "initial carrier phase [rad]",
        "seed": "noise seed of the single-trial channel (trials use run.seed + trial)",
    },
    "receiver": {
        "enable_sc": "estimate timing and CFO from the S&C preamble (else use true values)",
        "enable_tsai": "estimate SFO from the SFO preamble",
        "pilot_corrections": "residual SFO / Doppler correction from pilots",
        "ideal_sync": "use true STO, CFO and SFO (overrides the two above)",
        "residual_cfo_hz": "extra CFO injected after the preamble stage",
        "sfo_method": "pilot drift tracker: phase | parabolic",
        "band": "fraction of the band used by the phase-slope fits",
        "taps": "interpolator length (even)",
        "threshold": "S&C plateau threshold relative to the peak",
        "floor": "S&C absolute metric floor",
        "max_gap": "samples merged across plateau gaps",
        "int_cfo_search_bins": "integer CFO search span [bins of Fs/(2 N_S&C)]",
        "detect_threshold_db": "radar detection threshold above the map median",
    },
    "run": {
        "mode": "comm | radar | loopback",
        "trials": "number of Monte Carlo trials",
        "seed": "seed base; trial t uses seed + t",
        "out": "output directory",
        "workers": "process pool size (1 = serial)",
        "save_iq": "write the received buffer of trial 0 as an I/Q file",
    },
    "targets": {
        "list": "comma separated range_m:velocity_mps[:gain] (radar mode)",
    },
    "sweep": {
        "snr_db": "comma separated SNR grid",
        "cfo_hz": "comma separated CFO grid",
        "sfo_ppm": "comma separated SFO grid",
    },
}


@dataclass(frozen=True)
class ReceiverConfig:
    enable_sc: bool = True
    enable_tsai: bool = True
    pilot_corrections: bool = True
    ideal_sync: bool = False
    residual_cfo_hz: float = 0.0
    sfo_method: str = "phase"
    band: float = 0.9
    taps: int = interp.DEFAULT_TAPS
    threshold: float = 0.9
    floor: float = 0.5
    max_gap: int = 2
    int_cfo_search_bins: int = 8
    detect_threshold_db: float = 13.0

    def __post_init__(self):
        if self.sfo_method not in ("phase", "parabolic"):
            raise ConfigurationError(f"sfo_method must be phase or parabolic, got {self.sfo_method!r}")
        if not 0 < self.band <= 1:
            raise ConfigurationError(f"band must be in (0, 1], got {self.band}")


@dataclass(frozen=True)
class Scenario:
    plan: FramePlan
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    mode: str = "comm"
    trials: int = 100
    seed: int = 0
    targets: tuple[Target, ...] = ()
    out: str = "runs/out"
    workers: int = 1
    save_iq: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trials < 1:
            raise ConfigurationError(f"trial count must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.mode == "radar" and not self.targets:
            raise ConfigurationError("radar mode needs at least one target")
        self.plan.validate()
        self.channel.check_rate(self.plan.fs)

    def resolved(self) -> dict:
        """Every parameter the run depends on, as plain JSON types."""
        ch = self.channel
        return {
            "plan": asdict(self.plan),
            "channel": {
                "paths": [[float(p.delay_s), complex(p.gain).real, complex(p.gain).imag,
                           float(p.doppler_hz)] for p in ch.paths],
                "sto": float(ch.sto), "cfo_hz": float(ch.cfo_hz), "sfo_ppm": float(ch.sfo_ppm),
                "snr_db": _json_float(float(ch.snr_db)), "cpo_rad": float(ch.cpo_rad),
            },
            "receiver": asdict(self.receiver),
            "run": {"mode": self.mode, "trials": self.trials},
            "targets": [[float(t.range_m), float(t.velocity_mps), complex(t.gain).real,
                         complex(t.gain).imag]
                        for t in self.targets],
        }

    def scenario_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _json_float(x: float):
    return "inf" if math.isinf(x) else x


# ---- config file -----------------------------------------------------------

def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def parse_paths(s: str) -> tuple[PathSpec, ...]:
    out = []
    for item in s.split(","):
        if not item.strip():
            continue
        parts = [float(v) for v in item.split(":")]
        if len(parts) != 4:
            raise ConfigurationError(f"path needs delay_s:gain_re:gain_im:doppler_hz, got {item!r}")
        out.append(PathSpec(parts[0], complex(parts[1], parts[2]), parts[3]))
    return tuple(out)


def format_paths(paths) -> str:
    return ", ".join(f"{p.delay_s!r}:{complex(p.gain).real!r}:{complex(p.gain).imag!r}:{p.doppler_hz!r}"
                     for p in paths)


def parse_targets(s: str) -> tuple[Target, ...]:
    out = []
    for item in s.split(","):
        if not item.strip():
            continue
        parts = [float(v) for v in item.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigurationError(f"target needs range_m:velocity_mps[:gain], got {item!r}")
        out.append(Target(parts[0], parts[1], parts[2] if len(parts) == 3 else 1.0))
    return tuple(out)


def channel_from_section(sec) -> ChannelConfig:
    kw = {}
    if "paths" in sec:
        kw["paths"] = parse_paths(sec["paths"])
    for key in ("sto", "cfo_hz", "sfo_ppm", "snr_db", "cpo_rad"):
        if key in sec:
            kw[key] = float(sec[key])
    if "seed" in sec:
        kw["seed"] = int(sec["seed"])
    return ChannelConfig(**kw)


def channel_to_section(ch: ChannelConfig) -> dict[str, str]:
    return {
        "paths": format_paths(ch.paths),
        "sto": repr(float(ch.sto)),
        "cfo_hz": repr(float(ch.cfo_hz)),
        "sfo_ppm": repr(float(ch.sfo_ppm)),
        "snr_db": repr(float(ch.snr_db)),
        "cpo_rad": repr(float(ch.cpo_rad)),
        "seed": str(ch.seed),
    }


def _check_keys(cp: configparser.ConfigParser) -> None:
    for sec in cp.sections():
        if sec not in CONFIG_KEYS:
            raise ConfigurationError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in CONFIG_KEYS[sec]:
                raise ConfigurationError(f"unknown key {key!r} in [{sec}]")


def load_config(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    _check_keys(cp)
    return cp


def scenario_from_config(cp: configparser.ConfigParser | None, **overrides) -> Scenario:
    """Build a Scenario; ``overrides`` (preset, trials, seed, out, workers,
    mode) take precedence over the file."""
    cp = cp or load_config("")
    sec = cp["plan"] if cp.has_section("plan") else {}
    name = overrides.get("preset") or sec.get("preset", "pmcw1s")
    plan = preset(name)
    pkw = {}
    for f in fields(FramePlan):
        if f.name in sec and f.name != "name":
            pkw[f.name] = float(sec[f.name]) if f.name in ("fs", "fc") else int(sec[f.name])
    if any(getattr(plan, k) != v for k, v in pkw.items()):
        plan = replace(plan, **pkw, name=f"{plan.name}+custom")

    channel = channel_from_section(cp["channel"]) if cp.has_section("channel") else ChannelConfig()

    rkw = {}
    if cp.has_section("receiver"):
        for f in fields(ReceiverConfig):
            if f.name in cp["receiver"]:
                raw = cp["receiver"][f.name]
                typ = type(f.default)
                rkw[f.name] = _bool(raw) if typ is bool else typ(raw)
    receiver = ReceiverConfig(**rkw)

    run = cp["run"] if cp.has_section("run") else {}
    targets = parse_targets(cp["targets"].get("list", "")) if cp.has_section("targets") else ()
    kw = dict(
        mode=run.get("mode", "comm"),
        trials=int(run.get("trials", 100)),
        seed=int(run.get("seed", 0)),
        out=run.get("out", "runs/out"),
        workers=int(run.get("workers", 1)),
        save_iq=_bool(run.get("save_iq", "no")),
    )
    for k in ("mode", "trials", "seed", "out", "workers"):
        if overrides.get(k) is not None:
            kw[k] = overrides[k]
    return Scenario(plan, channel, receiver, targets=targets, **kw)


def scenario_to_config(scn: Scenario) -> str:
    cp = configparser.ConfigParser()
    plan = {"preset": scn.plan.name.split("+")[0]}
    plan.update({f.name: repr(getattr(scn.plan, f.name)) for f in fields(FramePlan) if f.name != "name"})
    cp["plan"] = plan
    cp["channel"] = channel_to_section(scn.channel)
    cp["receiver"] = {f.name: str(getattr(scn.receiver, f.name)) for f in fields(ReceiverConfig)}
    cp["run"] = {"mode": scn.mode, "trials": str(scn.trials), "seed": str(scn.seed),
                 "out": scn.out, "workers": str(scn.workers), "save_iq": str(scn.save_iq)}
    if scn.targets:
        cp["targets"] = {"list": ", ".join(f"{t.range_m!r}:{t.velocity_mps!r}:{complex(t.gain).real!r}"
                                           for t in scn.targets)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def sweep_grid(cp: configparser.ConfigParser | None, base: Scenario) -> list[dict]:
    sec = cp["sweep"] if cp is not None and cp.has_section("sweep") else {}
    snr = _floats(sec.get("snr_db", "")) or [base.channel.snr_db]
    cfo = _floats(sec.get("cfo_hz", "")) or [base.channel.cfo_hz]
    sfo = _floats(sec.get("sfo_ppm", "")) or [base.channel.sfo_ppm]
    return [{"snr_db": s, "cfo_hz": c, "sfo_ppm": p} for s in snr for c in cfo for p in sfo]


# ---- trials ----------------------------------------------------------------

SYNC_COLS = ["trial", "seed", "status", "sto_true", "sto_est", "sto_coarse", "sto_err",
             "cfo_true_hz", "cfo_frac_hz", "cfo_int_hz", "cfo_int_bins", "cfo_int_status",
             "cfo_sc_hz", "sfo_true_ppm", "sfo_tsai_ppm", "metric_peak", "plateau_width", "error"]
DEMOD_COLS = ["trial", "seed", "status", "ber", "n_errors", "n_bits", "mer_db",
              "residual_cfo_hz", "residual_sfo_ppm", "cfo_total_hz", "cfo_total_err_hz",
              "sfo_total_ppm", "sfo_total_err_ppm", "main_lag", "peak_snr_db"]
RADAR_COLS = ["trial", "seed", "n_detections", "range_m", "velocity_mps", "power_db",
              "range_err_m", "velocity_err_mps", "gain_db"]
DET_COLS = ["trial", "seed", "index", "range_m", "velocity_mps", "power_db", "range_bin", "velocity_bin"]


@dataclass
class TrialResult:
    trial: int
    seed: int
    status: str = "ok"  # ok | acq_failed | error
    sync: dict = field(default_factory=dict)
    demod: dict = field(default_factory=dict)
    radar: dict = field(default_factory=dict)
    detections: list = field(default_factory=list)
    symbols: np.ndarray | None = None
    rx: np.ndarray | None = None
    rdmap: object = None

    @property
    def fatal(self) -> bool:
        return self.status == "error"


def trial_seed(scn: Scenario, t: int) -> int:
    return scn.seed + t


def _frame(scn: Scenario, seed: int):
    plan = scn.plan
    seqs = sequence_set(plan.n, plan.n_sc)
    bits = random_bits(plan.data_bits, noise_rng(seed, 1))
    return seqs, assemble_frame(plan, seqs, bits)


def _comm_trial(scn: Scenario, t: int, keep: bool) -> TrialResult:
    plan, rx_cfg = scn.plan, scn.receiver
    seed = trial_seed(scn, t)
    res = TrialResult(t, seed)
    seqs, frame = _frame(scn, seed)
    ch = ChannelConfig(seed=seed) if scn.mode == "loopback" else replace(scn.channel, seed=seed)
    y = apply_channel(frame.samples, ch, plan.fs, rx_cfg.taps).samples
    if keep:
        res.rx = y

    drift = ch.sfo_ppm * 1e-6
    sync_cfg = SyncConfig(rx_cfg.threshold, rx_cfg.floor, rx_cfg.max_gap, rx_cfg.int_cfo_search_bins,
                          enable_tsai=rx_cfg.enable_tsai, tsai_band=rx_cfg.band, taps=rx_cfg.taps)
    known = {}
    if rx_cfg.ideal_sync or not rx_cfg.enable_sc:
        # the S&C stage would see the CFO on the receiver's faster clock
        known.update(known_sto=int(round(ch.sto)), known_cfo_hz=ch.cfo_hz / (1 + drift))
    if rx_cfg.ideal_sync:
        known["known_sfo_ppm"] = ch.sfo_ppm
    sync = {"trial": t, "seed": seed, "sto_true": ch.sto, "cfo_true_hz": ch.cfo_hz,
            "sfo_true_ppm": ch.sfo_ppm, "error": ""}
    try:
        rep, aligned = synchronize(y, plan, seqs, sync_cfg, **known)
    except AcquisitionError as exc:
        res.status = "acq_failed"
        sync.update(status=res.status, error=str(exc))
        res.sync = sync
        res.demod = {"trial": t, "seed": seed, "status": res.status}
        return res
    sync.update(status="ok", sto_est=rep.sto, sto_coarse=rep.sto_coarse, sto_err=rep.sto - ch.sto,
                cfo_frac_hz=rep.cfo_frac_hz, cfo_int_hz=rep.cfo_int_hz, cfo_int_bins=rep.cfo_int_bins,
                cfo_int_status=rep.cfo_int_status, cfo_sc_hz=rep.cfo_hz, sfo_tsai_ppm=rep.sfo_ppm,
                metric_peak=rep.metric_peak, plateau_width=rep.plateau_width)
    res.sync = sync

    if rx_cfg.residual_cfo_hz:
        aligned = apply_cfo(aligned, rx_cfg.residual_cfo_hz, plan.fs)
    opts = DemodOptions(pilot_corrections=rx_cfg.pilot_corrections, sfo_method=rx_cfg.sfo_method,
                        band=rx_cfg.band)
    dr, pe = demodulate(aligned[plan.preamble_len:], plan, seqs[2], frame.bits, opts)
    cfo_total = rep.cfo_tx_hz() + pe.residual_cfo_hz
    sfo_total = rep.sfo_ppm + pe.residual_sfo_ppm
    res.demod = {
        "trial": t, "seed": seed, "status": "ok", "ber": dr.ber, "n_errors": dr.n_errors,
        "n_bits": int(dr.bits.size), "mer_db": dr.mer_db, "residual_cfo_hz": pe.residual_cfo_hz,
        "residual_sfo_ppm": pe.residual_sfo_ppm, "cfo_total_hz": cfo_total,
        "cfo_total_err_hz": cfo_total - ch.cfo_hz - rx_cfg.residual_cfo_hz,
        "sfo_total_ppm": sfo_total, "sfo_total_err_ppm": sfo_total - ch.sfo_ppm,
        "main_lag": pe.main_lag, "peak_snr_db": float(np.mean(dr.peak_snr_db)),
    }
    if keep:
        res.symbols = dr.symbols
    return res


def _radar_trial(scn: Scenario, t: int, keep: bool) -> TrialResult:
    plan = scn.plan
    seed = trial_seed(scn, t)
    res = TrialResult(t, seed)
    seqs, frame = _frame(scn, seed)
    ch = echo_channel(scn.targets, plan, scn.channel.snr_db, seed)
    y = apply_channel(frame.samples, ch, plan.fs, scn.receiver.taps).samples
    if keep:
        res.rx = y
    pay = y[plan.preamble_len: plan.preamble_len + plan.payload_len]
    rdm = range_doppler(range_profiles(pay, plan, seqs[2], frame.symbols), plan)
    dets = detect(rdm, scn.receiver.detect_threshold_db)
    res.detections = [{"trial": t, "seed": seed, "index": i, "range_m": d.range_m,
                       "velocity_mps": d.velocity_mps, "power_db": d.power_db,
                       "range_bin": d.range_bin, "velocity_bin": d.velocity_bin}
                      for i, d in enumerate(dets)]
    row = {"trial": t, "seed": seed, "n_detections": len(dets)}
    tgt = scn.targets[0]
    if dets:
        # detection closest to the first target, in resolution cells
        best = min(dets, key=lambda d: ((d.range_m - tgt.range_m) / rdm.range_res) ** 2
                   + ((d.velocity_mps - tgt.velocity_mps) / rdm.vel_res) ** 2)
        row.update(range_m=best.range_m, velocity_mps=best.velocity_mps, power_db=best.power_db,
                   range_err_m=best.range_m - tgt.range_m,
                   velocity_err_mps=best.velocity_mps - tgt.velocity_mps)
        if math.isfinite(scn.channel.snr_db):
            row["gain_db"] = integration_gain_db(rdm, best.range_bin, best.velocity_bin,
                                                 scn.channel.snr_db)
    res.radar = row
    if keep:
        res.rdmap = rdm
    return res


def run_trial(scn: Scenario, t: int, keep: bool = False) -> TrialResult:
    try:
        if scn.mode == "radar":
            return _radar_trial(scn, t, keep)
        return _comm_trial(scn, t, keep)
    except Exception as exc:  # recorded, the run carries on
        log.exception("trial %d failed", t)
        seed = trial_seed(scn, t)
        err = {"trial": t, "seed": seed, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
        return TrialResult(t, seed, "error", sync=dict(err), demod=dict(err), radar=dict(err))


def _run_trial_args(args):
    return run_trial(*args)


def run_trials(scn: Scenario) -> list[TrialResult]:
    jobs = [(scn, t, t == 0) for t in range(scn.trials)]
    if scn.workers == 1:
        results = [run_trial(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=scn.workers) as pool:
            results = list(pool.map(_run_trial_args, jobs))
    return sorted(results, key=lambda r: r.trial)


# ---- artifacts -------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(header: list[str], rows: list[dict], scn_hash: str, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# scenario={scn_hash} seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def _stats(vals) -> tuple[float, float, int]:
    v = np.asarray([x for x in vals if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return float("nan"), float("nan"), 0
    return float(np.mean(v)), float(np.std(v)), int(v.size)


SUMMARY_COLS = ["quantity", "unit", "mean", "std", "n", "table"]


def summarize(results: list[TrialResult], mode: str) -> list[dict]:
    rows = []

    def add(name, unit, vals, scale=1.0):
        m, s, n = _stats(vals)
        rows.append({"quantity": name, "unit": unit, "mean": m, "std": s, "n": n,
                     "table": f"{m * scale:.2f}+-{s * scale:.2f}" if n else ""})

    ok = [r for r in results if r.status == "ok"]
    if mode == "radar":
        rr = [r.radar for r in ok]
        add("n_detections", "count", [x.get("n_detections") for x in rr])
        add("range_err", "m", [x.get("range_err_m") for x in rr])
        add("velocity_err", "m/s", [x.get("velocity_err_mps") for x in rr])
        add("integration_gain", "dB", [x.get("gain_db") for x in rr])
    else:
        sy = [r.sync for r in ok]
        de = [r.demod for r in ok]
        add("cfo_sc", "Hz", [x.get("cfo_sc_hz") for x in sy])
        add("cfo_residual", "Hz", [x.get("residual_cfo_hz") for x in de])
        add("cfo_total", "Hz", [x.get("cfo_total_hz") for x in de])
        add("sfo_tsai", "ppm", [x.get("sfo_tsai_ppm") for x in sy])
        add("sfo_total", "ppm", [x.get("sfo_total_ppm") for x in de])
        add("sto_err", "samples", [x.get("sto_err") for x in sy])
        add("cfo_total_err", "Hz", [x.get("cfo_total_err_hz") for x in de])
        add("sfo_total_err", "ppm", [x.get("sfo_total_err_ppm") for x in de])
        add("ber", "ratio", [x.get("ber") for x in de])
        add("mer", "dB", [x.get("mer_db") for x in de])
    rows.append({"quantity": "trials_ok", "unit": "count", "mean": float(len(ok)), "std": 0.0,
                 "n": len(results), "table": ""})
    return rows


@dataclass
class RunArtifacts:
    out: Path
    files: dict[str, Path]
    results: list[TrialResult] = field(repr=False)
    summary: list[dict] = field(repr=False)
    scenario_hash: str = ""

    @property
    def fatal_errors(self) -> int:
        return sum(r.fatal for r in self.results)


def _setup_log(out: Path) -> logging.Handler:
    h = logging.FileHandler(out / "run.log", mode="w")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(h)
    log.setLevel(logging.INFO)
    return h


def write_manifest(scn: Scenario, out: Path, files: dict[str, Path], command: str) -> Path:
    man = {
        "command": command,
        "scenario": scn.scenario_hash(),
        "seed": scn.seed,
        "resolved": scn.resolved(),
        "run": {"trials": scn.trials, "seed": scn.seed, "workers": scn.workers,
                "save_iq": scn.save_iq, "out": scn.out},
        "interpolator": f"lanczos-{scn.receiver.taps}",
        "noise_rng": "Philox(SeedSequence([seed + trial, stream]))",
        "version": __version__,
        "artifacts": sorted(p.name for p in files.values()),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return path


def run_scenario(scn: Scenario, command: str = "simulate") -> RunArtifacts:
    out = Path(scn.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = _setup_log(out)
    h, seed = scn.scenario_hash(), scn.seed
    try:
        log.info("scenario %s seed %d mode %s trials %d", h, seed, scn.mode, scn.trials)
        results = run_trials(scn)
        files: dict[str, Path] = {}

        def put(name, text):
            p = out / name
            p.write_text(text)
            files[name] = p

        put("params.csv", f"# scenario={h} seed={seed}\n"
            + reports_to_csv([(scn.plan.name, derive_parameters(scn.plan))]))
        if scn.mode == "radar":
            put("radar.csv", csv_text(RADAR_COLS, [r.radar for r in results], h, seed))
            dets = [d for r in results for d in r.detections]
            put("detections.csv", csv_text(DET_COLS, dets, h, seed))
            rdm = results[0].rdmap
            if rdm is not None:
                write_rdmap(out / "rdmap.bin", rdm.magnitude, rdm.range_res, rdm.vel_res,
                            float(rdm.velocity_axis[0]))
                files["rdmap.bin"] = out / "rdmap.bin"
                put("rdmap.json", json.dumps({"scenario": h, "seed": seed, "trial": 0,
                                              "rows": "range", "cols": "velocity"},
                                             indent=2, sort_keys=True) + "\n")
        else:
            put("sync.csv", csv_text(SYNC_COLS, [r.sync for r in results], h, seed))
            put("demod.csv", csv_text(DEMOD_COLS, [r.demod for r in results], h, seed))
            sym = results[0].symbols
            lines = [f"# scenario={h} seed={seed} trial=0 columns=re im"]
            if sym is not None:
                lines += [f"{_cell(z.real)} {_cell(z.imag)}" for z in sym]
            put("constellation.txt", "\n".join(lines) + "\n")
        summary = summarize(results, scn.mode)
        put("summary.csv", csv_text(SUMMARY_COLS, summary, h, seed))
        if scn.save_iq and results[0].rx is not None:
            write_iq(out / "rx_trial0000.iq", IqBuffer(results[0].rx, scn.plan.fs, h))
            files["rx_trial0000.iq"] = out / "rx_trial0000.iq"
        files["manifest.json"] = write_manifest(scn, out, files, command)
        for r in results:
            if r.status != "ok":
                log.warning("trial %d: %s %s", r.trial, r.status, r.sync.get("error", ""))
        log.info("done: %d/%d trials ok", sum(r.status == "ok" for r in results), len(results))
    finally:
        log.removeHandler(handler)
        handler.close()
    return RunArtifacts(out, files, results, summary, h)
