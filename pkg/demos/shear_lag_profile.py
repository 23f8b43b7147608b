"""Staged run of the small frame from Python, printing the mid-span bottom-plate lambda profile."""

from pathlib import Path

from boxgirder.bridge import build_bridge, run_staged
from boxgirder.config import load_config

cfg = load_config(Path(__file__).with_name("mini_bridge.json"))
model = build_bridge(cfg.bridge)
an = run_staged(model)
print(f"{len(an.results)} stages, worst equilibrium residual {max(r.equilibrium for r in an.results):.1e}")
prof = an.profiles["total"]["main_L2"]
for plate in sorted(set(prof.plate)):
    hi, lo, x = prof.plate_stats(plate)
    print(f"{plate:18s} max {hi:.3f} at x = {x:+.2f} m   min {lo:.3f}")
