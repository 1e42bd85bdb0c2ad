import math
import random
from fractions import Fraction

import pytest

from msmaxmin import oracle
from msmaxmin.engine import (
    Choice,
    EngineConfig,
    MSMaxmin,
    NotReady,
    PeriodRecord,
    SequencingError,
    SolverFailure,
    c0_at_most,
    c0_enclosure,
    candidate_period_end,
    competitive_ratio,
    compute_c0,
    decide_period,
    run,
)
from msmaxmin.harness.generators import GeneratorParams, gen_adversarial_flipflop, gen_random
from msmaxmin.model import AllocationMap, Instance, Interval, lambda_pairwise, nu_step
from msmaxmin.solvers import EXACT, GREEDY, SolverHandle, solve_exact
from msmaxmin.stable_greedy import StableState

from conftest import horizon

EXACT_W1 = EngineConfig(1, Fraction(1))


def random_horizon(rng, max_n=3, max_m=3, max_tau=8, ws=(1, 2, 3)):
    params = GeneratorParams(
        n=rng.randint(1, max_n), m=rng.randint(1, max_m), tau=rng.randint(1, max_tau),
        w=rng.choice(ws), delta=rng.choice([0, 1, 5]), value_max=rng.randint(0, 7),
        availability_density=rng.uniform(0.2, 1.0), churn=rng.uniform(0, 0.8), seed=rng.getrandbits(63),
    )
    return params, gen_random(params)


class TestC0:
    def test_rho_one_w_one(self):
        assert compute_c0(1, 1) == pytest.approx(math.sqrt(3) - 1, abs=1e-12)
        assert competitive_ratio(1, 1) == pytest.approx(2 - math.sqrt(3), abs=1e-12)

    def test_rho_half_w_one(self):
        c = compute_c0(0.5, 1)
        assert c == pytest.approx(math.sqrt(1.25) - 0.5, abs=1e-12)
        assert abs(1 * c * c - 0.5 * 2 * (1 - c)) < 1e-12

    @pytest.mark.parametrize("rho", [0.05, 0.1, 0.25, 1 / 3, 0.5, 0.9, 1.0])
    @pytest.mark.parametrize("w", [1, 2, 3, 5, 10, 100])
    def test_residual_and_range(self, rho, w):
        c = compute_c0(rho, w)
        assert abs(w * c * c - rho * (w + 1) * (1 - c)) < 1e-10
        assert 0 < c < 1
        lo, hi = c0_enclosure(rho, w)
        assert lo <= Fraction(c) + Fraction(1, 10**15) and Fraction(c) - Fraction(1, 10**15) <= hi
        assert hi - lo < Fraction(1, 10**12)
        assert c0_at_most(hi, rho, w) and not c0_at_most(lo, rho, w) or lo == hi

    def test_numpy_scalars(self):
        import numpy as np

        assert compute_c0(np.float64(0.05), np.int64(1)) == compute_c0(0.05, 1)
        assert EngineConfig(np.int64(2), np.float64(0.5)).rho == Fraction(1, 2)

    def test_rational_root_is_exact(self):
        # rho = 1/4, w = 1: sqrt(1/16 + 1/2) - 1/4 = 1/2
        assert c0_enclosure(Fraction(1, 4), 1) == (Fraction(1, 2), Fraction(1, 2))
        assert c0_at_most(Fraction(1, 2), Fraction(1, 4), 1)
        assert not c0_at_most(Fraction(1, 2) - Fraction(1, 10**30), Fraction(1, 4), 1)

    @pytest.mark.parametrize("rho,w", [(0, 1), (1.5, 1), (-0.1, 2), (0.5, 0), (0.5, 1.5)])
    def test_bad_arguments(self, rho, w):
        with pytest.raises(ValueError):
            compute_c0(rho, w)

    def test_config_for_solver(self):
        assert EngineConfig.for_solver(2, EXACT).rho == 1
        assert EngineConfig.for_solver(2, EXACT, 0.5).rho == Fraction(1, 2)
        with pytest.raises(ValueError):
            EngineConfig.for_solver(1, GREEDY)
        assert EngineConfig.for_solver(1, GREEDY, "0.3").rho == Fraction(3, 10)


def state_with(**intervals):
    st = StableState(list(intervals))
    for e, ivs in intervals.items():
        st.replace_from(e, 1, [Interval(*iv) for iv in ivs])
    return st


class TestCandidatePeriodEnd:
    def test_default(self):
        assert candidate_period_end(state_with(e1=[(1, 2, "p1")]), 4, 3) == 7

    def test_start_induced_candidate(self):
        s = 5
        st = state_with(e1=[(s, s + 1, "p1")], e2=[(s + 1, s + 2, "p2")])
        assert candidate_period_end(st, s, 2) == s

    def test_interval_covering_window(self):
        assert candidate_period_end(state_with(e1=[(3, 6, "p1")]), 3, 3) == 6

    def test_start_at_s_induces_nothing(self):
        assert candidate_period_end(state_with(e1=[(3, 6, "p1")], e2=[(3, 5, "p1")]), 3, 3) == 5


def _decide(nu_b, prev, state, s, t, config, delta=10):
    insts = [Instance(j, {"x": {"p1"}}, {("x", "p1"): 0}) for j in range(s, t + 1)]
    b = []
    for k, inst in enumerate(insts):
        # a private entity carrying nu_b on the first step; one player so nu is its load
        inst = Instance(inst.t, {"x": {"p1"}}, {("x", "p1"): nu_b if k == 0 else 0})
        insts[k] = inst
        b.append(AllocationMap(inst.t, {"x": "p1"}))
    return decide_period(s, t, prev, state, b, insts, ["p1"], delta, config)


class TestDecidePeriod:
    def test_all_zero_goes_to_approx(self):
        rec = _decide(0, None, state_with(e1=[]), 1, 1, EXACT_W1)
        assert (rec.L, rec.R, rec.lambda_S, rec.nu_B, rec.chosen) == (0, 0, 0, 0, Choice.APPROX)

    def test_carried_stability_keeps_stable(self):
        config = EngineConfig(2, Fraction(1))
        c0 = compute_c0(1, 2)
        st = state_with(e1=[(1, 3, "p1")])
        prev = PeriodRecord(1, 1, 0, 0, 0, 0, Choice.STABLE)
        for nu_b in (5, 16, 17, 30):
            rec = _decide(nu_b, prev, st, 2, 2, config)
            assert (rec.L, rec.lambda_S, rec.R) == (10, 0, 10)
            want_approx = nu_b >= 10 + 0 + c0 * 10  # threshold 16.86, far from the integers tried
            assert (rec.chosen is Choice.APPROX) == want_approx

    def test_no_carry_after_approx_or_beyond_lookahead(self):
        config = EngineConfig(2, Fraction(1))
        st = state_with(e1=[(1, 3, "p1")])
        assert _decide(5, PeriodRecord(1, 1, 0, 0, 0, 0, Choice.APPROX), st, 2, 2, config).L == 0
        st = state_with(e1=[(1, 5, "p1")])
        assert _decide(5, PeriodRecord(1, 3, 0, 0, 0, 0, Choice.STABLE), st, 4, 4, config).L == 0

    def test_full_length_period_has_no_right_term(self):
        st = state_with(e1=[(1, 5, "p1")])
        rec = _decide(0, None, st, 1, 2, EXACT_W1)
        assert rec.R == 0 and rec.lambda_S == 10

    def test_exact_tie_goes_to_approx(self):
        config = EngineConfig(1, Fraction(1, 4))  # c0 = 1/2
        st = state_with(e1=[(1, 2, "p1")], e2=[(2, 2, "p1")])
        # period [1,1], t < s + w: R = lambda(S_{1:2}) = delta
        rec = _decide(1, None, st, 1, 1, config, delta=2)
        assert (rec.R, rec.lambda_S, rec.L) == (2, 0, 0)
        assert rec.chosen is Choice.APPROX
        assert _decide(0, None, st, 1, 1, config, delta=2).chosen is Choice.STABLE

    def test_bookkeeping_errors(self):
        st = state_with(e1=[])
        with pytest.raises(SequencingError):
            _decide(0, PeriodRecord(1, 2, 0, 0, 0, 0, Choice.STABLE), st, 4, 4, EXACT_W1)
        with pytest.raises(SequencingError):
            _decide(0, None, st, 2, 2, EXACT_W1)


class TestRun:
    def test_single_step(self):
        h = horizon(["p1", "p2"], ["e1", "e2"], 3, [{"e1": {"p1": 2, "p2": 1}, "e2": {"p2": 4}}])
        tr = run(h, EXACT, EXACT_W1)
        assert len(tr.periods) == 1 and tr.periods[0].start == tr.periods[0].end == 1
        assert tr.periods[0].chosen is Choice.APPROX
        assert tr.allocations[0] == solve_exact(h.instance(1), h.players, h.entities)

    def test_flipflop_is_all_approx(self):
        h = gen_adversarial_flipflop(3, 4, 7, delta=9)
        tr = run(h, EXACT, EngineConfig(2, Fraction(1)), keep_snapshots=True)
        for rec in tr.periods:
            assert (rec.L, rec.R, rec.lambda_S) == (0, 0, 0)
            assert rec.chosen is Choice.APPROX
        for e, iset in tr.stable_intervals.items():
            assert all(iv.start == iv.end for iv in iset.intervals)
        per_step = [nu_step(solve_exact(h.instance(t), h.players, h.entities), h.instance(t), h.players)
                    for t in range(1, 8)]
        assert tr.nu == sum(per_step)
        assert tr.lambda_intervals == 0
        assert tr.total_interval == sum(per_step)

    def test_large_delta_single_stable_entity(self):
        tau = 12  # periods of length w + 1 tile the horizon, so no clamped tail period
        h = horizon(["p1", "p2"], ["e1"], 50, [{"e1": {"p1": 0}}] * tau)
        for w in (1, 2, 3):
            tr = run(h, EXACT, EngineConfig(w, Fraction(1)))
            assert all(rec.chosen is Choice.STABLE for rec in tr.periods)
            assert tr.lambda_pairwise == (tau - 1) * 50
            assert lambda_pairwise(tr.allocations, 50, 1, tau) == (tau - 1) * 50
            assert tr.lambda_intervals <= tr.lambda_pairwise

    def test_solver_failure_names_the_step(self):
        h = horizon(["p1"], ["e1"], 1, [{"e1": {"p1": 1}}, {}, {"e1": {"p1": 1}}])

        def flaky(inst, players, entities):
            if inst.t == 3:
                raise RuntimeError("boom")
            return solve_exact(inst, players, entities)

        with pytest.raises(SolverFailure, match="t=3") as info:
            run(h, SolverHandle("flaky", Fraction(1), flaky), EXACT_W1)
        assert info.value.t == 3

    def test_solver_output_outside_lists_is_stripped(self):
        h = horizon(["p1", "p2"], ["e1"], 0, [{"e1": {"p1": 1}}])
        sloppy = SolverHandle("sloppy", Fraction(1), lambda i, ps, es: AllocationMap(i.t, {"e1": "p2"}))
        tr = run(h, sloppy, EXACT_W1)
        assert tr.allocations[0].assign == {}

    def test_structure_and_period_facts_on_random_runs(self):
        rng = random.Random(21)
        for _ in range(150):
            params, h = random_horizon(rng)
            tr = run(h, EXACT, EngineConfig(params.w, Fraction(1)), keep_snapshots=True)
            assert oracle.check_period_structure(tr) == []
            assert oracle.check_period_lemma(tr) == []
            assert tr.lambda_intervals <= tr.lambda_pairwise
            for rec in tr.periods:
                approx = rec.nu_B >= rec.L + rec.lambda_S + compute_c0(1, params.w) * rec.R
                if abs(rec.nu_B - rec.L - rec.lambda_S - compute_c0(1, params.w) * rec.R) > 1e-9:
                    assert (rec.chosen is Choice.APPROX) == approx
            for a in tr.allocations:
                a.validate(h.instance(a.t))

    def test_committed_plan_never_changes(self):
        rng = random.Random(8)
        for _ in range(100):
            params, h = random_horizon(rng)
            tr = run(h, EXACT, EngineConfig(params.w, Fraction(1)), keep_snapshots=True)
            starts = sorted(tr.snapshots)
            for s, s_next in zip(starts, starts[1:]):
                for e in h.entities:
                    before = [iv for iv in tr.snapshots[s][e] if iv.start < s_next]
                    after = [iv for iv in tr.snapshots[s_next][e] if iv.start < s_next]
                    assert before == after
            for rec in tr.periods:
                held = tr.snapshots[rec.start]
                for e in h.entities:
                    for t in range(rec.start, rec.end + 1):
                        assert tr.stable_intervals[e].player_at(t) == next(
                            (iv.player for iv in held[e] if iv.start <= t <= iv.end), None)

    def test_window_edge_end_can_grow(self):
        # an interval cut by the lookahead edge is recomputed when its start opens a period
        h = horizon(["p1"], ["e1", "e2"], 5, [
            {"e1": {"p1": 1}, "e2": {"p1": 1}}, {"e1": {"p1": 1}, "e2": {"p1": 1}},
            {"e2": {"p1": 1}}, {"e1": {"p1": 1}, "e2": {"p1": 1}}, {"e1": {"p1": 1}, "e2": {"p1": 1}},
            {"e1": {"p1": 1}, "e2": {"p1": 1}},
        ])
        tr = run(h, EXACT, EngineConfig(2, Fraction(1)), keep_snapshots=True)
        assert Interval(4, 5, "p1") in tr.snapshots[3]["e1"]
        assert Interval(4, 6, "p1") in tr.stable_intervals["e1"].intervals
        assert 5 not in {rec.end for rec in tr.periods}
        assert oracle.check_period_lemma(tr) == []

    def test_deterministic(self):
        rng = random.Random(2)
        for _ in range(30):
            params, h = random_horizon(rng)
            config = EngineConfig(params.w, Fraction(1))
            assert run(h, EXACT, config).to_dict() == run(h, EXACT, config).to_dict()


class TestStreaming:
    def _engine(self, h, w):
        return MSMaxmin(h.players, h.entities, h.delta, EXACT, EngineConfig(w, Fraction(1)))

    def test_first_poll_matches_batch(self):
        _, h = random_horizon(random.Random(5), max_tau=8)
        for w in (1, 2):
            eng = self._engine(h, w)
            for t in range(1, min(h.tau, 1 + w) + 1):
                eng.feed(h.instance(t))
            if h.tau >= 1 + w:
                assert eng.poll(1) == run(h, EXACT, EngineConfig(w, Fraction(1))).allocations[0]

    def test_not_ready_before_window(self):
        h = gen_random(GeneratorParams(n=2, m=2, tau=6, seed=3))
        eng = self._engine(h, 2)
        eng.feed(h.instance(1))
        eng.feed(h.instance(2))
        with pytest.raises(NotReady):
            eng.poll(1)
        eng.feed(h.instance(3))
        first = eng.poll(1)
        assert eng.poll(1) is first

    def test_out_of_order_feed(self):
        h = gen_random(GeneratorParams(n=2, m=2, tau=4, seed=3))
        eng = self._engine(h, 1)
        eng.feed(h.instance(1))
        with pytest.raises(SequencingError):
            eng.feed(h.instance(3))

    def test_close_pads_the_tail(self):
        h = gen_random(GeneratorParams(n=2, m=2, tau=4, seed=3))
        eng = self._engine(h, 3)
        for t in range(1, 5):
            eng.feed(h.instance(t))
        with pytest.raises(NotReady):
            eng.poll(4)
        eng.close()
        assert eng.poll(4) == run(h, EXACT, EngineConfig(3, Fraction(1))).allocations[3]
        with pytest.raises(IndexError):
            eng.poll(5)

    def test_interleaved_feed_and_poll_matches_batch(self):
        rng = random.Random(13)
        for _ in range(40):
            params, h = random_horizon(rng)
            batch = run(h, EXACT, EngineConfig(params.w, Fraction(1)))
            eng = self._engine(h, params.w)
            got = {}
            for t in range(1, h.tau + 1):
                eng.feed(h.instance(t))
                u = t - params.w
                if u >= 1:
                    got[u] = eng.poll(u)
            eng.close()
            for u in range(1, h.tau + 1):
                got.setdefault(u, eng.poll(u))
            assert tuple(got[u] for u in range(1, h.tau + 1)) == batch.allocations
            assert eng.trace().periods == batch.periods
