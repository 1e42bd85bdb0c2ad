"""An adversary that never lets an entity stay put: stability is worthless and the engine knows it."""
# %%
from fractions import Fraction

from msmaxmin import oracle
from msmaxmin.engine import EngineConfig, run
from msmaxmin.harness.generators import gen_adversarial_flipflop
from msmaxmin.solvers import EXACT

h = gen_adversarial_flipflop(n=3, m=4, tau=8, delta=10)
for t in (1, 2, 3):
    print(f"t={t}:", {e: sorted(h.instance(t).allowed_players(e)) for e in h.entities})

# %%
for w in (1, 2, 3):
    trace = run(h, EXACT, EngineConfig(w, Fraction(1)))
    choices = {rec.chosen.value for rec in trace.periods}
    print(f"w={w}: periods={len(trace.periods)} branches={choices} nu={trace.nu} lam={trace.lambda_pairwise}")
best = oracle.offline_optimal(h)
print(f"offline optimum {best.total} with lam={best.lam}: the online engine matches it")
