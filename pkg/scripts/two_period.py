"""First-period choice in the two-period discrete example (lambda=.85, c=.125, u=+-1)."""

from attnalloc import ModelParams, two_period_thresholds

tab = two_period_thresholds(ModelParams(1, 1, -1, -1, 0.85, 0.0, 0.125), dt=1.0)
print(f"experiment iff p0 in [{tab.experiment_lo:.4f}, {tab.experiment_hi:.4f}]")
print(f"own-biased on [{tab.experiment_lo:.4f}, {tab.own_lo_hi:.4f}] and "
      f"[{tab.own_hi_lo:.4f}, {tab.experiment_hi:.4f}]")
print(f"opposite-biased on ({tab.own_lo_hi:.4f}, {tab.own_hi_lo:.4f})")
