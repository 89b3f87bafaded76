"""Belief distribution of a uniform population over time, true state L."""

import argparse
from pathlib import Path

from attnalloc import ModelParams, evolve, init_population, solve
from attnalloc.population import snapshots_to_csv

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out")
args = ap.parse_args()
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

times = [0, 0.4, 1.5, 5, 50]
for c, tag in ((0.3, "own"), (0.1, "opposite")):
    sol = solve(ModelParams(1, 1, -1, -1, 1.0, 0.0, c))
    snaps = evolve(sol, init_population("uniform"), "L", times=times)
    print(f"c={c} ({sol.regime.value})")
    for s in snaps:
        share = ", ".join(f"{k} {v:.3f}" for k, v in s.media_share.items())
        print(f"  t={s.time:5.1f} polarization {s.polarization:.4f}  {share}")
    (out / f"population_{tag}.csv").write_text(snapshots_to_csv(snaps))
