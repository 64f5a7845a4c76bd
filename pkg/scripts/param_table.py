"""Print and save the derived performance figures of the four full presets."""

import argparse
from pathlib import Path

from pmcw_radcom.sysparams import derive_parameters, format_table, preset, reports_to_csv

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out", type=Path, default=Path("runs/params"))
ap.add_argument("presets", nargs="*", default=["pmcw1", "pmcw2", "pmcw3", "pmcw4"])
args = ap.parse_args()

named = [(p, derive_parameters(preset(p))) for p in args.presets]
print(format_table(named), end="")
args.out.mkdir(parents=True, exist_ok=True)
(args.out / "params.csv").write_text(reports_to_csv(named))
print(f"wrote {args.out / 'params.csv'}")
