"""Diminishing returns: interior attention under g(x)=sqrt(1+4x-x^2)-1."""

import argparse
from pathlib import Path

import numpy as np

from attnalloc import ModelParams, sqrt_frontier, gamma_oracle, gamma_solution

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out")
ap.add_argument("--oracle", action="store_true", help="also run the restricted-frontier DP")
args = ap.parse_args()
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

fr = sqrt_frontier()
print(f"gamma = {fr.gamma:.12f}")
grid = np.linspace(0, 1, 401)
for c in (0.4, 0.1, 0.04):
    par = ModelParams(1, 1, 0, 0, 1.0, 0.0, c)
    sol = gamma_solution(fr, par)
    v, a = sol.value(grid), sol.alpha(grid)
    interior = np.sum((a > 1e-9) & (a < 1 - 1e-9)) / len(grid)
    line = f"c={c}: case {sol.case}, interior attention on {interior:.1%} of beliefs"
    if args.oracle:
        dp = gamma_oracle(fr, par, dt=1e-3, n_grid=2001)
        line += f", oracle gap {np.max(np.abs(dp.value - sol.value(dp.grid))):.2e}"
    print(line)
    np.savetxt(out / f"gamma_c{c}.csv", np.column_stack([grid, v, a]), delimiter=",",
               header="p,V,alpha", comments="")
