"""Ratio experiments and the randomized oracle suite behind ``verify``."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import oracle
from ..engine import EngineConfig, compute_c0, run
from ..model import Horizon, lambda_intervals
from ..solvers import get_solver
from ..stable_greedy import stable_entity
from .generators import GeneratorParams, gen_random

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "seed", "n", "m", "tau", "w", "delta", "solver", "rho",
    "engine_total_interval", "engine_total_pairwise", "offline_total",
    "ratio_interval", "ratio_pairwise", "bound", "bound_holds",
    "periods", "solver_calls", "wall_time",
]


@dataclass
class TrialRow:
    seed: int
    n: int
    m: int
    tau: int
    w: int
    delta: int
    solver: str
    rho: str
    engine_total_interval: int
    engine_total_pairwise: int
    offline_total: int | None
    ratio_interval: float | None
    ratio_pairwise: float | None
    bound: float | None
    bound_holds: bool | None
    periods: int
    solver_calls: int
    wall_time: float


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        ratios = [r.ratio_interval for r in self.rows if r.ratio_interval is not None]
        pairwise = [r.ratio_pairwise for r in self.rows if r.ratio_pairwise is not None]
        certified = [r for r in self.rows if r.bound_holds is not None]
        return {
            "trials": len(self.rows),
            "certified": len(certified),
            "bound_violations": sum(1 for r in certified if not r.bound_holds),
            "min_ratio_interval": min(ratios) if ratios else None,
            "mean_ratio_interval": float(np.mean(ratios)) if ratios else None,
            "min_ratio_pairwise": min(pairwise) if pairwise else None,
            "mean_ratio_pairwise": float(np.mean(pairwise)) if pairwise else None,
        }

    def as_dicts(self) -> list:
        return [asdict(r) for r in self.rows]


def run_trial(params: GeneratorParams, solver_name: str = "exact", rho=None, certify: bool = True) -> TrialRow:
    horizon = gen_random(params)
    solver = get_solver(solver_name)
    config = EngineConfig.for_solver(params.w, solver, rho)
    started = time.perf_counter()
    trace = run(horizon, solver, config)
    elapsed = time.perf_counter() - started
    offline_total = ratio_iv = ratio_pw = bound = holds = None
    if certify:
        try:
            offline = oracle.offline_optimal(horizon)
        except oracle.OracleSizeError:
            offline = None
        if offline is not None:
            offline_total = offline.total
            if offline.total > 0:
                ratio_iv = trace.total_interval / offline.total
                ratio_pw = trace.total_pairwise / offline.total
            bound = oracle.theorem_bound_rhs(trace, offline)
            if solver.rho is not None:
                holds = oracle.check_theorem_bound(trace, offline, config)
    return TrialRow(
        seed=params.seed, n=params.n, m=params.m, tau=params.tau, w=params.w, delta=params.delta,
        solver=solver_name, rho=str(config.rho),
        engine_total_interval=trace.total_interval, engine_total_pairwise=trace.total_pairwise,
        offline_total=offline_total, ratio_interval=ratio_iv, ratio_pairwise=ratio_pw,
        bound=bound, bound_holds=holds,
        periods=len(trace.periods), solver_calls=trace.solver_calls, wall_time=elapsed,
    )


def _run_trial_args(args):
    return run_trial(*args)


def sweep(
    base: GeneratorParams,
    seeds: Sequence[int],
    deltas: Sequence[int],
    ws: Sequence[int],
    solver_name: str = "exact",
    rho=None,
    certify: bool = True,
    workers: int = 1,
) -> ExperimentReport:
    """One trial per (seed, delta, w); trials are independent and may run in worker processes."""
    jobs = []
    for seed in seeds:
        for delta in deltas:
            for w in ws:
                params = GeneratorParams(**{**asdict(base), "seed": seed, "delta": delta, "w": w})
                jobs.append((params, solver_name, rho, certify))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_trial_args, jobs))
    else:
        rows = [_run_trial_args(job) for job in jobs]
    return ExperimentReport(rows)


@dataclass
class VerificationResult:
    trials: int
    checks: dict
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None


def random_small_params(rng: np.random.Generator, seed: int, max_n=3, max_m=3, max_tau=8,
                        ws=(1, 2, 3), deltas=(0, 1, 5)) -> GeneratorParams:
    return GeneratorParams(
        n=int(rng.integers(1, max_n + 1)),
        m=int(rng.integers(1, max_m + 1)),
        tau=int(rng.integers(1, max_tau + 1)),
        w=int(rng.choice(ws)),
        delta=int(rng.choice(deltas)),
        value_max=int(rng.integers(0, 8)),
        availability_density=float(rng.uniform(0.2, 1.0)),
        churn=float(rng.uniform(0.0, 0.8)),
        seed=seed,
    )


def _greedy_matches_brute(horizon: Horizon):
    for e in horizon.entities:
        window = horizon.window(1, horizon.tau)
        greedy = stable_entity(e, 1, horizon.tau, window, horizon.players)
        best = oracle.brute_stability_prefix_optima(e, 1, horizon.tau, window, horizon.players, 1)
        for j, want in enumerate(best):
            got = lambda_intervals(greedy, 1, 1 + j, 1)
            if got != want:
                return f"entity {e}: greedy stability {got} on [1, {1 + j}] but optimum is {want}"
    return None


def run_verification(trials: int = 500, seed: int = 0) -> VerificationResult:
    """Run the randomized oracle suite, stopping at the first counterexample.

    Each trial draws a small horizon and checks greedy optimality on every
    prefix, the dominance conditions of the greedy plan against the offline
    optimum's intervals, period structure, the per-entity prefix bound and
    the competitive guarantee with the exact solver.
    """
    from .io import dumps_horizon

    rng = np.random.default_rng(seed)
    solver = get_solver("exact")
    checks = dict.fromkeys(["greedy_optimality", "lemma1", "period_structure", "lemma2", "theorem_bound"], 0)
    for k in range(trials):
        params = random_small_params(rng, seed=int(rng.integers(0, 2**63)))
        horizon = gen_random(params)
        config = EngineConfig.for_solver(params.w, solver)
        trace = run(horizon, solver, config, keep_snapshots=True)

        def fail(name, detail):
            return VerificationResult(k + 1, checks, {
                "check": name, "detail": detail, "params": asdict(params),
                "horizon": dumps_horizon(horizon),
            })

        problem = _greedy_matches_brute(horizon)
        if problem:
            return fail("greedy_optimality", problem)
        checks["greedy_optimality"] += 1

        offline = oracle.offline_optimal(horizon)
        window = horizon.window(1, horizon.tau)
        for e, x_set in offline.interval_sets(horizon.entities).items():
            y_set = stable_entity(e, 1, horizon.tau, window, horizon.players)
            cond, dom = oracle.check_lemma1_conditions(x_set, y_set, 1, horizon.tau)
            if cond and not dom:
                return fail("lemma1", f"entity {e}: conditions hold but prefix dominance fails")
        checks["lemma1"] += 1

        problems = oracle.check_period_structure(trace) + oracle.check_period_lemma(trace)
        if problems:
            return fail("period_structure", "; ".join(problems))
        checks["period_structure"] += 1

        violations = oracle.check_lemma2(trace, horizon)
        if violations:
            return fail("lemma2", repr(violations[0]))
        checks["lemma2"] += 1

        if not oracle.check_theorem_bound(trace, offline, config):
            return fail("theorem_bound", f"engine total {trace.total_interval}, offline {offline.total}, "
                                         f"c0={compute_c0(config.rho, config.w):.6f}")
        checks["theorem_bound"] += 1
    return VerificationResult(trials, checks)

