"""Discrete-time value iteration against the closed-form envelope on random draws."""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import draw_params  # noqa: E402

from attnalloc import solve, solve_infinite_horizon  # noqa: E402

ap = argparse.ArgumentParser()
ap.add_argument("--draws", type=int, default=9)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--dt", type=float, default=1e-3)
ap.add_argument("--grid", type=int, default=2001)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
regimes = ("NoLearning", "OwnOnly", "OwnAndOpposite")
print(f"{'regime':16s} {'c':>8s} {'sup gap':>10s} {'secs':>6s}")
for i in range(args.draws):
    p = draw_params(rng, regimes[i % 3])
    t0 = time.perf_counter()
    dp = solve_infinite_horizon(p, dt=args.dt, n_grid=args.grid)
    gap = np.max(np.abs(dp.value - solve(p).value(dp.grid)))
    print(f"{regimes[i % 3]:16s} {p.c:8.4f} {gap:10.2e} {time.perf_counter() - t0:6.2f}")
