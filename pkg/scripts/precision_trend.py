"""Spread of the preamble SFO estimate across the four geometries.

Only the SFO preamble matters here, so every plan is cut to ten payload
blocks to keep the frames short.
"""

import argparse

import numpy as np

from pmcw_radcom.impairments import ChannelConfig
from pmcw_radcom.scenario import Scenario, run_trials
from pmcw_radcom.sysparams import preset

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=100)
ap.add_argument("--snr", type=float, default=16.23)
args = ap.parse_args()

for name in ("pmcw1", "pmcw2", "pmcw3", "pmcw4"):
    scn = Scenario(preset(name).with_blocks(10),
                   ChannelConfig(sto=12345, cfo_hz=-85e3, sfo_ppm=100, snr_db=args.snr),
                   trials=args.trials)
    res = run_trials(scn)
    sfo = np.array([r.sync["sfo_tsai_ppm"] for r in res if r.status == "ok"])
    cfo = np.array([r.sync["cfo_sc_hz"] for r in res if r.status == "ok"])
    print(f"{name}: SFO {sfo.mean():8.3f} +- {sfo.std():.3f} ppm   "
          f"S&C CFO {cfo.mean() / 1e3:8.3f} +- {cfo.std() / 1e3:.3f} kHz   n={sfo.size}")
