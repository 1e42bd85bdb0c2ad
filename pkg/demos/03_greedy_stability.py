"""The stable plan for one entity: grab the run reaching furthest, then repeat after it ends."""
# %%
from msmaxmin import oracle
from msmaxmin.model import Instance, lambda_intervals
from msmaxmin.stable_greedy import build_index, stable_entity

players = ["p1", "p2", "p3"]
lists = [{"p1", "p2"}, {"p1", "p2"}, {"p2"}, {"p2", "p3"}, {"p3"}, set(), {"p1", "p3"}, {"p1"}]
window = [Instance(1 + k, {"e": ps}) for k, ps in enumerate(lists)]

index = build_index("e", 1, window, players)
print("availability runs (start, end, player):", index.runs)
for i in range(1, 9):
    print(f"stab({i}) = {index.stab(i)}")

# %% greedy intervals and their stability value, prefix by prefix, against brute force
plan = stable_entity("e", 1, 8, window, players)
print("greedy intervals:", plan.intervals)
best = oracle.brute_stability_prefix_optima("e", 1, 8, window, players, delta=1)
for j in range(8):
    print(f"[1,{1 + j}] greedy={lambda_intervals(plan, 1, 1 + j, 1)} optimum={best[j]}")
