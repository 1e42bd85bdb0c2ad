"""Empirical ratios on random horizons, next to the certified lower bound."""
# %%
import numpy as np

from msmaxmin.engine import competitive_ratio
from msmaxmin.harness.experiments import sweep
from msmaxmin.harness.generators import GeneratorParams

base = GeneratorParams(n=3, m=3, tau=8, value_max=5, availability_density=0.6, churn=0.3)
report = sweep(base, seeds=range(30), deltas=[0, 1, 5], ws=[1, 2, 3])
print(report.summary())

# %% worst observed ratio per (delta, w), interval and pairwise stability
rows = [r for r in report.rows if r.ratio_interval is not None]
for delta in (0, 1, 5):
    for w in (1, 2, 3):
        sel = [r for r in rows if r.delta == delta and r.w == w]
        iv = np.array([r.ratio_interval for r in sel])
        pw = np.array([r.ratio_pairwise for r in sel])
        print(f"delta={delta} w={w}: min {iv.min():.3f} / {pw.min():.3f}  mean {iv.mean():.3f} / {pw.mean():.3f}"
              f"  (guarantee {competitive_ratio(1, w):.3f})")
