"""Cutoffs along a cost sweep and sign checks of the comparative statics."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import draw_params  # noqa: E402

from attnalloc import ModelParams, solve  # noqa: E402
from attnalloc.statics import check_claims  # noqa: E402

base = ModelParams(1.0, 0.8, -1.0, -0.8, 1.0, 0.0, 0.3)
print(f"{'c':>6s} {'regime':16s} {'p_low*':>8s} {'p_high*':>8s} {'p_check':>8s} {'p_low':>8s} {'p_high':>8s}")
for c in np.linspace(0.02, 0.9, 12):
    cu = solve(base.replace(c=c)).cutoffs
    f = lambda x: f"{x:8.4f}" if x is not None else f"{'-':>8s}"
    print(f"{c:6.3f} {solve(base.replace(c=c)).regime.value:16s} {f(cu.p_low_star)} {f(cu.p_high_star)} "
          f"{f(cu.p_check)} {f(cu.p_low)} {f(cu.p_high)}")

rng = np.random.default_rng(2)
total, bad = 0, []
for i in range(300):
    p = draw_params(rng, ("OwnOnly", "OwnAndOpposite")[i % 2])
    n, v = check_claims(p)
    total += n
    bad += v
print(f"\n{total} sign checks on 300 draws, {len(bad)} violations")
for b in sorted(set(s.split("=")[0] for s in bad)):
    print(f"  {b}: {sum(s.startswith(b) for s in bad)}")
