"""Regimes, cutoffs and the value envelope for the u=(1,.8,-1,-.8) example at two costs."""

import argparse
from pathlib import Path

import numpy as np

from attnalloc import ModelParams, solve

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out")
args = ap.parse_args()
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

base = ModelParams(1.0, 0.8, -1.0, -0.8, 1.0, 0.0, 0.3)
grid = np.linspace(0, 1, 401)
for c in (0.3, 0.13):
    sol = solve(base.replace(c=c))
    print(f"c={c}: {sol.regime.value}")
    for k, v in sol.cutoffs.as_dict().items():
        if v is not None:
            print(f"  {k:12s} {v:.6f}")
    np.savetxt(out / f"regimes_c{c}.csv", np.column_stack([grid, sol.value(grid), sol.alpha(grid)]),
               delimiter=",", header="p,V,alpha", comments="")
