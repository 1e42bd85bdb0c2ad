"""Multistage online maxmin allocation with w-lookahead."""
from .engine import (
    Choice,
    EngineConfig,
    MSMaxmin,
    NotReady,
    PeriodRecord,
    RunTrace,
    c0_enclosure,
    candidate_period_end,
    competitive_ratio,
    compute_c0,
    decide_period,
    run,
)
from .model import (
    AllocationMap,
    AssignmentIntervalSet,
    Horizon,
    Instance,
    Interval,
    ValidationError,
    lambda_intervals,
    lambda_pairwise,
    nu_step,
    nu_sum,
    total_objective,
)
from .solvers import EXACT, GREEDY, SolverHandle, get_solver, solve_exact, solve_greedy_heuristic
from .stable_greedy import AvailabilityIndex, StableState, build_index, stable_allocate, stable_entity

__version__ = "0.1.0"
