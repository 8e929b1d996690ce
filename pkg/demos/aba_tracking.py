"""Adaptive beam adjustment vs always-sense tracking over a full run."""

import numpy as np

from isacsim import load_config, run_scheme, summarize

cfg = load_config()
for scheme in ("aba", "rb", "sweep"):
    tr = run_scheme(cfg, scheme, seed=0)
    tr.meta["array"] = "8x8"
    s = summarize(tr)
    print(f"{scheme:6s} rate {s.avg_rate:6.3f} bit/s/Hz  sensing slots {s.sense_slots:6d}  "
          f"mee+ekf calls {s.mee_calls + s.ekf_calls:6d}")
    if scheme == "aba":
        ev = tr.events()
        onsets = np.flatnonzero((ev[1:] == "sense") & (ev[:-1] != "sense")) + 1
        print("       sensing episodes start at slots", onsets.tolist())
