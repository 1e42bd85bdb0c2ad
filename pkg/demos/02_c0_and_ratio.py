"""How the threshold weight c0 and the guaranteed ratio move with rho and the lookahead w."""
# %%
import numpy as np

from msmaxmin.engine import c0_enclosure, competitive_ratio, compute_c0

# c0 is the positive root of w c^2 = rho (w+1) (1 - c)
c0 = compute_c0(1, 1)
print(f"rho=1, w=1: c0={c0:.10f} (sqrt(3)-1={np.sqrt(3) - 1:.10f}), ratio={competitive_ratio(1, 1):.10f}")
lo, hi = c0_enclosure(1, 1)
print(f"rational enclosure width: {float(hi - lo):.2e}")

# %% ratio table
rhos = np.round(np.arange(0.1, 1.01, 0.1), 2)
ws = [1, 2, 3, 5, 10, 100]
print("rho   " + "".join(f"w={w:<8}" for w in ws))
for rho in rhos:
    print(f"{rho:<5} " + "".join(f"{competitive_ratio(float(rho), w):<10.4f}" for w in ws))

# %% more lookahead helps; at rho=1 c0 tends to (sqrt(5)-1)/2, so the ratio levels off near 0.382
for w in ws:
    print(f"w={w:<4} c0={compute_c0(1, w):.6f} ratio={competitive_ratio(1, w):.6f}")

# %% comparison with the older rho/(4 rho + 2) bound at w=1
grid = np.arange(1, 21) / 20
gain = np.array([competitive_ratio(r, 1) - r / (4 * r + 2) for r in grid])
print(f"smallest gain over rho/(4rho+2) divided by rho: {np.min(gain / grid):.4f} (> 0.1)")
