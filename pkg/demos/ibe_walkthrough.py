"""Initial beam establishment for one seed: beam size and enclosing area per slot."""

import sys

from isacsim import load_config, run_ibe

n = int(sys.argv[1]) if len(sys.argv) > 1 else 32
cfg = load_config().with_array(n).with_overrides(run={"n_slots": 60})
trace, offsets, slots = run_ibe(cfg.world(), cfg, seed=0)
print(f"{n}x{n} array, converged after {slots} slots")
for k, area in enumerate(trace.meta["ibe_areas"]):
    nz, ny = trace.beam[k, 2:4].astype(int)
    print(f"  slot {k}: active {nz}x{ny}, enclosing-ellipse area {area:.3e} rad^2, rate {trace.rate[k]:.2f}")
print("estimated CR-to-scatterer offsets [m]:")
for dx, dy in offsets:
    print(f"  ({dx:+.2f}, {dy:+.2f})")
