"""Quickstart: build a tiny horizon by hand, run the online engine, compare with the offline optimum."""
# %%
from fractions import Fraction

from msmaxmin import oracle
from msmaxmin.engine import EngineConfig, run
from msmaxmin.model import Horizon, Instance
from msmaxmin.solvers import EXACT

# Two sites share two engineers over four days.  e1 can only work at p1 on day 3,
# so keeping it at p2 all week is impossible.
days = [
    {"e1": {"p1": 3, "p2": 2}, "e2": {"p1": 1, "p2": 2}},
    {"e1": {"p1": 3, "p2": 2}, "e2": {"p1": 1, "p2": 2}},
    {"e1": {"p1": 4}, "e2": {"p1": 1, "p2": 1}},
    {"e1": {"p1": 3, "p2": 2}, "e2": {"p1": 1, "p2": 2}},
]
instances = tuple(
    Instance(t, {e: set(row) for e, row in day.items()}, {(e, p): v for e, row in day.items() for p, v in row.items()})
    for t, day in enumerate(days, start=1)
)
h = Horizon(("p1", "p2"), ("e1", "e2"), delta=2, instances=instances)

# %% one step of lookahead, exact single-shot solver (rho = 1)
trace = run(h, EXACT, EngineConfig(w=1, rho=Fraction(1)))
for alloc in trace.allocations:
    print(f"day {alloc.t}: {dict(sorted(alloc.assign.items()))}  [{trace.choice_at(alloc.t).value}]")
for rec in trace.periods:
    print(f"period [{rec.start},{rec.end}] L={rec.L} R={rec.R} lam(S)={rec.lambda_S} nu(B)={rec.nu_B} -> {rec.chosen.value}")

# %% how far from the best plan chosen with full knowledge?
best = oracle.offline_optimal(h)
print(f"online: nu={trace.nu} lam_interval={trace.lambda_intervals} lam_pairwise={trace.lambda_pairwise}")
print(f"offline: total={best.total} (nu={best.nu}, lam={best.lam})")
print(f"guaranteed at least {oracle.theorem_bound_rhs(trace, best):.3f}, got {trace.total_interval}")
