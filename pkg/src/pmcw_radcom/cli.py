"""``pmcw-lab`` command line front end."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigurationError
from .scenario import (CONFIG_KEYS, csv_text, load_config, run_scenario, scenario_from_config,
                       sweep_grid)
from .sysparams import PRESETS, derive_parameters, format_table, preset, reports_to_csv


def _config_help() -> str:
    lines = ["config file keys (INI, key = value):"]
    for sec, keys in CONFIG_KEYS.items():
        lines.append(f"  [{sec}]")
        lines += [f"    {k:<22}{doc}" for k, doc in keys.items()]
    return "\n".join(lines)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help=f"plan preset ({', '.join(PRESETS)})")
    p.add_argument("--config", type=Path, help="scenario INI file")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pmcw-lab",
        description="PMCW radar-communication baseband lab",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("params", help="print derived performance figures")
    p.add_argument("--preset", action="append", help="repeatable; default pmcw1..pmcw4")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", help="directory for params.csv")

    for name, text in (("simulate", "communication Monte Carlo"), ("radar", "range-velocity run"),
                       ("sweep", "grid over SNR / CFO / SFO")):
        p = sub.add_parser(name, help=text, epilog=_config_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p)
        if name == "simulate":
            p.add_argument("--mode", choices=("comm", "loopback"))
    return ap


def _load(args):
    cp = load_config(args.config.read_text()) if getattr(args, "config", None) else None
    return cp


def cmd_params(args) -> int:
    cp = _load(args)
    names = args.preset or []
    named = []
    if cp is not None and not names:
        scn = scenario_from_config(cp)
        named.append((scn.plan.name, derive_parameters(scn.plan)))
    for n in names or ([] if named else ["pmcw1", "pmcw2", "pmcw3", "pmcw4"]):
        named.append((n, derive_parameters(preset(n))))
    sys.stdout.write(format_table(named))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "params.csv").write_text(reports_to_csv(named))
    return 0


def _scenario(args, mode=None):
    cp = _load(args)
    scn = scenario_from_config(cp, preset=args.preset, trials=args.trials, seed=args.seed,
                               out=args.out, workers=args.workers,
                               mode=mode or getattr(args, "mode", None))
    return cp, scn


def _report(art) -> int:
    for row in art.summary:
        sys.stdout.write(f"{row['quantity']:<16}{row['mean']:>14.6g} +- {row['std']:<12.4g}"
                         f" {row['unit']} (n={row['n']})\n")
    sys.stdout.write(f"artifacts in {art.out} (scenario {art.scenario_hash})\n")
    return 1 if art.fatal_errors else 0


def cmd_simulate(args) -> int:
    _, scn = _scenario(args)
    if scn.mode == "radar":
        raise ConfigurationError("use the radar subcommand for radar scenarios")
    return _report(run_scenario(scn, "simulate"))


def cmd_radar(args) -> int:
    _, scn = _scenario(args, mode="radar")
    return _report(run_scenario(scn, "radar"))


def cmd_sweep(args) -> int:
    cp, base = _scenario(args)
    grid = sweep_grid(cp, base)
    root = Path(base.out)
    rows, status = [], 0
    for i, point in enumerate(grid):
        scn = replace(base, channel=replace(base.channel, **point), out=str(root / f"point{i:03d}"))
        art = run_scenario(scn, "sweep")
        status |= 1 if art.fatal_errors else 0
        row = {"point": i, **point, "scenario": art.scenario_hash}
        for s in art.summary:
            row[f"{s['quantity']}_mean"] = s["mean"]
            row[f"{s['quantity']}_std"] = s["std"]
        rows.append(row)
    header = list(rows[0].keys())
    text = csv_text(header, rows, base.scenario_hash(), base.seed)
    root.mkdir(parents=True, exist_ok=True)
    (root / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return status


COMMANDS = {"params": cmd_params, "simulate": cmd_simulate, "radar": cmd_radar, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except ConfigurationError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
