"""Ground truth for small horizons.

* :func:`offline_optimal` - exact offline optimum by dynamic programming over
  full allocations.
* :func:`offline_exhaustive` - enumeration of every allocation sequence, used
  to validate the DP at micro scale.
* :func:`brute_stability_prefix_optima` - best per-entity stability value by
  enumerating every per-step choice.
* ``check_*`` - executable forms of the structural lemmas and of the
  competitive guarantee.

Allocations are encoded per entity as 0 (unassigned) or ``k + 1`` for
``players[k]``; a full allocation is a point of the grid ``(n+1)^m`` in C
order, so "smallest flat index" is the lexicographic order used to pick a
canonical optimum.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .engine import EngineConfig, RunTrace, as_fraction, c0_enclosure, compute_c0
from .model import (
    AllocationMap,
    AssignmentIntervalSet,
    Horizon,
    Instance,
    lambda_intervals,
    lambda_pairwise,
    maximal_runs,
    nu_step,
    nu_sum,
)

NEG = -(1 << 50)


class OracleSizeError(ValueError):
    """The problem is too large for exhaustive or DP ground truth."""


@dataclass(frozen=True)
class OfflineSolution:
    allocations: tuple
    total: int
    nu: int
    lam: int

    def interval_sets(self, entities: Sequence[str]) -> dict:
        """Maximal same-player runs, so interval and pairwise stability agree."""
        return {e: maximal_runs(self.allocations, e) for e in entities}


def _codes_for(inst: Instance, e: str, players: Sequence[str]) -> list:
    allowed = inst.allowed_players(e)
    return [0] + [k + 1 for k, p in enumerate(players) if p in allowed]


def _step_scores(inst: Instance, players: Sequence[str], entities: Sequence[str]) -> np.ndarray:
    """``nu`` of every grid allocation at one step, ``NEG`` where a restriction list is violated."""
    n, m = len(players), len(entities)
    shape = (n + 1,) * m
    loads = np.zeros((n,) + shape, dtype=np.int64)
    penalty = np.zeros(shape, dtype=np.int64)
    for axis, e in enumerate(entities):
        bshape = [1] * m
        bshape[axis] = n + 1
        allowed = inst.allowed_players(e)
        pen = np.array([0] + [0 if p in allowed else NEG for p in players], dtype=np.int64)
        penalty = penalty + pen.reshape(bshape)
        for k, p in enumerate(players):
            vec = np.zeros(n + 1, dtype=np.int64)
            vec[k + 1] = inst.value(e, p)
            loads[k] = loads[k] + vec.reshape(bshape)
    return loads.min(axis=0) + penalty


def _stability_relax(g: np.ndarray, delta: int) -> np.ndarray:
    """``out[x] = max_y g[y] + delta * #{e : x_e == y_e != 0}``.

    The agreement bonus is a sum of per-axis terms, so the max-plus product
    factorises into one cheap pass per axis.
    """
    if delta == 0:
        return np.broadcast_to(g.max(), g.shape).copy()
    out = g
    for axis in range(g.ndim):
        bonus_shape = [1] * g.ndim
        bonus_shape[axis] = g.shape[axis]
        bonus = np.full(g.shape[axis], delta, dtype=np.int64)
        bonus[0] = 0
        out = np.maximum(out.max(axis=axis, keepdims=True), out + bonus.reshape(bonus_shape))
    return out


def _decode(flat: int, n: int, m: int, players: Sequence[str], entities: Sequence[str], t: int) -> AllocationMap:
    codes = np.unravel_index(flat, (n + 1,) * m) if m else ()
    return AllocationMap(t, {e: players[int(c) - 1] for e, c in zip(entities, codes) if c})


def offline_optimal(horizon: Horizon, max_states: int = 100_000, max_tau: int = 12) -> OfflineSolution:
    """Offline optimum of ``nu + pairwise stability`` over the whole horizon.

    Backward DP over full allocations; among optimal trajectories the
    lexicographically smallest (in grid order, earliest step first) is returned.
    """
    players, entities = horizon.players, horizon.entities
    n, m, tau, delta = horizon.n, horizon.m, horizon.tau, horizon.delta
    if (n + 1) ** m > max_states or tau > max_tau:
        raise OracleSizeError(f"(n+1)^m = {(n + 1) ** m}, tau = {tau} exceed caps {max_states}, {max_tau}")
    if tau == 0:
        return OfflineSolution((), 0, 0, 0)
    scores = [_step_scores(horizon.instance(t), players, entities) for t in range(1, tau + 1)]
    value = [None] * (tau + 1)
    value[tau] = scores[tau - 1]
    for t in range(tau - 1, 0, -1):
        value[t] = np.maximum(scores[t - 1] + _stability_relax(value[t + 1], delta), NEG)

    flat = int(np.argmax(value[1]))
    total = int(value[1].flat[flat])
    path = [flat]
    shape = (n + 1,) * m
    for t in range(2, tau + 1):
        prev = np.unravel_index(path[-1], shape) if m else ()
        agree = np.zeros(shape, dtype=np.int64)
        for axis, code in enumerate(prev):
            if code:
                ind = np.zeros(n + 1, dtype=np.int64)
                ind[code] = 1
                bshape = [1] * m
                bshape[axis] = n + 1
                agree = agree + ind.reshape(bshape)
        path.append(int(np.argmax(value[t] + delta * agree)))
    allocs = tuple(_decode(f, n, m, players, entities, t) for t, f in enumerate(path, start=1))
    nu = nu_sum(allocs, horizon, 1, tau)
    lam = lambda_pairwise(allocs, delta, 1, tau)
    assert nu + lam == total, (nu, lam, total)
    return OfflineSolution(allocs, total, nu, lam)


def offline_exhaustive(horizon: Horizon, max_sequences: int = 2_000_000) -> OfflineSolution:
    """Offline optimum by scoring every allocation sequence at once.

    Per-step values come from :func:`nu_step` on each decoded allocation and
    the stability term from a direct pairwise comparison, so nothing is shared
    with the DP except the grid order used for tie-breaking.
    """
    players, entities = horizon.players, horizon.entities
    n, m, tau, delta = horizon.n, horizon.m, horizon.tau, horizon.delta
    size = (n + 1) ** m
    if size**tau > max_sequences:
        raise OracleSizeError(f"{size}^{tau} sequences exceed the cap {max_sequences}")
    if tau == 0:
        return OfflineSolution((), 0, 0, 0)
    grid = list(itertools.product(range(n + 1), repeat=m))
    step_value = np.full((tau, size), NEG, dtype=np.int64)
    for t in range(1, tau + 1):
        inst = horizon.instance(t)
        for k, codes in enumerate(grid):
            alloc = AllocationMap(t, {e: players[c - 1] for e, c in zip(entities, codes) if c})
            if all(p in inst.allowed_players(e) for e, p in alloc.assign.items()):
                step_value[t - 1, k] = nu_step(alloc, inst, players)
    kept = np.array([[sum(1 for x, y in zip(cx, cy) if x and x == y) for cy in grid] for cx in grid], dtype=np.int64)

    total = np.zeros((size,) * tau, dtype=np.int64)
    for t in range(tau):
        shape = [1] * tau
        shape[t] = size
        total = total + step_value[t].reshape(shape)
    for t in range(tau - 1):
        shape = [1] * tau
        shape[t], shape[t + 1] = size, size
        total = total + delta * kept.reshape(shape)
    best = int(np.argmax(total))
    seq = np.unravel_index(best, (size,) * tau)
    allocs = tuple(
        AllocationMap(t, {e: players[c - 1] for e, c in zip(entities, grid[int(k)]) if c})
        for t, k in enumerate(seq, start=1)
    )
    nu = nu_sum(allocs, horizon, 1, tau)
    lam = lambda_pairwise(allocs, delta, 1, tau)
    return OfflineSolution(allocs, int(total.flat[best]), nu, lam)


def brute_stability_prefix_optima(
    entity: str,
    a: int,
    b: int,
    window: Sequence[Instance],
    players: Sequence[str],
    delta: int,
    max_sequences: int = 5_000_000,
) -> list:
    """``out[j]`` is the best stability value of ``entity`` over ``[a, a+j]``.

    Every per-step choice (unassigned or an allowed player) is enumerated; a
    choice sequence is read as maximal same-player runs, which is the best
    interval set it can induce.
    """
    if b < a:
        raise ValueError(f"empty range [{a}, {b}]")
    if b - a > 10:
        raise OracleSizeError(f"range [{a}, {b}] longer than 11 steps")
    window = list(window[: b - a + 1])
    if len(window) != b - a + 1:
        raise ValueError(f"window covers {len(window)} steps, need {b - a + 1}")
    options = [_codes_for(inst, entity, players) for inst in window]
    count = 1
    for opts in options:
        count *= len(opts)
    if count > max_sequences:
        raise OracleSizeError(f"{count} choice sequences exceed the cap {max_sequences}")
    if b == a:
        return [0]
    idx = np.indices([len(o) for o in options]).reshape(len(options), -1)
    seqs = np.stack([np.asarray(o)[i] for o, i in zip(options, idx)], axis=1)
    kept = (seqs[:, :-1] == seqs[:, 1:]) & (seqs[:, :-1] != 0)
    prefix = np.cumsum(kept, axis=1)
    return [0] + [int(v) * delta for v in prefix.max(axis=0)]


def brute_stability_optimum(entity, a, b, window, players, delta) -> int:
    return brute_stability_prefix_optima(entity, a, b, window, players, delta)[-1]


def check_lemma1_conditions(
    X: AssignmentIntervalSet, Y: AssignmentIntervalSet, a: int, b: int, delta: int = 1
) -> tuple:
    """Return ``(conditions_hold, prefix_dominance_holds)`` for ``X`` against ``Y`` on ``[a, b]``.

    Conditions: (i) ``Y`` starts no later than ``X``; (ii) an interval of ``Y``
    starting inside an interval ``J'`` of ``X`` ends no earlier than ``J'``;
    (iii) ``Y`` assigns the entity whenever ``X`` does.
    """
    xs, ys = X.intervals, Y.intervals
    cond = True
    if xs and (not ys or ys[0].start > xs[0].start):
        cond = False
    if cond:
        for J in ys:
            for Jx in xs:
                if Jx.start <= J.start <= Jx.end and J.end < Jx.end:
                    cond = False
                    break
            if not cond:
                break
    if cond:
        for Jx in xs:
            for t in range(Jx.start, Jx.end + 1):
                if Y.player_at(t) is None:
                    cond = False
                    break
            if not cond:
                break
    dominance = all(
        lambda_intervals(X, a, a + j, delta) <= lambda_intervals(Y, a, a + j, delta) for j in range(b - a + 1)
    )
    return cond, dominance


def check_period_structure(trace: RunTrace) -> list:
    """Problems with period tiling, period lengths or the solver call count."""
    problems = []
    expected = 1
    for rec in trace.periods:
        if rec.start != expected:
            problems.append(f"period {rec.start}-{rec.end} does not start at {expected}")
        if not rec.start <= rec.end <= rec.start + trace.w:
            problems.append(f"period {rec.start}-{rec.end} longer than w+1={trace.w + 1}")
        expected = rec.end + 1
    if expected != trace.tau + 1:
        problems.append(f"periods end at {expected - 1}, horizon has tau={trace.tau}")
    if trace.solver_calls != trace.tau:
        problems.append(f"solver called {trace.solver_calls} times for tau={trace.tau}")
    return problems


def check_period_lemma(trace: RunTrace) -> list:
    """Interval ends seen at a period start become period ends; starts become period starts.

    An end that sits on the right edge of the window in which its interval was
    computed may be nothing more than that edge: when the interval's start is
    itself a period start the entity is recomputed over a longer window and
    the interval can grow.  Such ends are skipped.  Only events inside
    ``[1, tau]`` are checked; needs ``keep_snapshots``.
    """
    ends = {rec.end for rec in trace.periods}
    starts = {rec.start for rec in trace.periods}
    computed_at = {}
    problems = []
    for s in sorted(trace.snapshots):
        for e, ivs in trace.snapshots[s].items():
            for iv in ivs:
                origin = computed_at.setdefault((e, iv), s)
                edge = origin + trace.w
                if s <= iv.end <= s + trace.w and iv.end < edge and iv.end <= trace.tau and iv.end not in ends:
                    problems.append(f"s={s}: end {iv.end} of {e} never became a period end")
                if s + 1 <= iv.start <= s + trace.w and iv.start <= trace.tau and iv.start not in starts:
                    problems.append(f"s={s}: start {iv.start} of {e} never became a period start")
    return problems


def check_lemma2(trace: RunTrace, horizon: Horizon) -> list:
    """Check the per-entity prefix bound against the best alternative stability.

    For every entity ``e`` and step ``t`` let ``alpha`` be the latest interval
    start ``<= t`` in the plan held at the end of ``t``.  When
    ``t <= alpha + w`` the best stability any valid allocation sequence
    reaches for ``e`` on ``[1, t]`` must not exceed
    ``(w+1)/w * lam(S|alpha on [1, alpha]) + lam(S|alpha on [alpha, t])``.
    Returns the violations as ``(entity, t, lhs, rhs)``.
    """
    w, delta, tau = trace.w, trace.delta, trace.tau
    factor = Fraction(w + 1, w)
    violations = []
    for e in trace.entities:
        best = brute_stability_prefix_optima(e, 1, tau, horizon.window(1, tau), horizon.players, delta)
        for t in range(1, tau + 1):
            held = trace.snapshot_at(t)[e]
            alphas = [iv.start for iv in held if iv.start <= t]
            if not alphas:
                continue
            alpha = max(alphas)
            if t > alpha + w:
                continue
            plan = AssignmentIntervalSet(e, trace.snapshot_at(alpha)[e])
            rhs = factor * lambda_intervals(plan, 1, alpha, delta) + lambda_intervals(plan, alpha, t, delta)
            lhs = best[t - 1]
            if lhs > rhs:
                violations.append((e, t, lhs, rhs))
    return violations


def _check_rho(trace: RunTrace, config: EngineConfig) -> Fraction:
    if as_fraction(config.rho) != trace.rho or config.w != trace.w:
        raise ValueError(f"config (rho={config.rho}, w={config.w}) does not match the trace (rho={trace.rho}, w={trace.w})")
    return trace.rho


def check_theorem_bound(trace: RunTrace, offline: OfflineSolution, config: EngineConfig) -> bool:
    """Exactly decide ``lam(A) + nu(A) >= w c0^2/(w+1) lam(O) + (1-c0) rho nu(O)``.

    ``lam(A)`` is the interval stability of the output.  Because
    ``w c0^2 = rho (w+1) (1-c0)``, both weights equal ``rho (1-c0)``, so the
    test is ``c0 >= 1 - lhs / (rho * total(O))``, settled by the quadratic.
    """
    rho = _check_rho(trace, config)
    lhs = trace.total_interval
    opt = offline.total
    if opt == 0:
        return lhs >= 0
    return c0_at_least(1 - Fraction(lhs) / (rho * opt), rho, trace.w)


def c0_at_least(y, rho, w: int) -> bool:
    """Exactly decide ``c0 >= y`` (the quadratic is increasing on ``c >= 0``)."""
    rho, y = as_fraction(rho), as_fraction(y)
    if y <= 0:
        return True
    return w * y * y + rho * (w + 1) * y - rho * (w + 1) <= 0


def check_theorem_bound_enclosure(trace: RunTrace, offline: OfflineSolution, config: EngineConfig) -> bool:
    """Conservative variant: weights evaluated at the enclosure endpoints that make the bound largest."""
    rho = _check_rho(trace, config)
    w = trace.w
    lo, hi = c0_enclosure(rho, w)
    lam_weight = Fraction(w, w + 1) * hi * hi
    nu_weight = (1 - lo) * rho
    return trace.total_interval >= lam_weight * offline.lam + nu_weight * offline.nu


def theorem_bound_rhs(trace: RunTrace, offline: OfflineSolution) -> float:
    """Float value of the guaranteed lower bound, for reports."""
    return float(trace.rho) * (1 - compute_c0(trace.rho, trace.w)) * offline.total
