"""The w-lookahead online allocation loop.

At every period start ``s`` the greedy plan ``S`` is refreshed over
``[s, s+w]``, the period end ``t`` is the earliest candidate end time, the
single-shot solver produces ``B_{s:t}``, and the whole period is committed to
either ``S_{s:t}`` (STABLE) or ``B_{s:t}`` (APPROX) by a weighted threshold
test.  ``c0`` is irrational in general, so the test is decided exactly from
the sign of the defining quadratic instead of a floating-point product.
"""
from __future__ import annotations

import enum
import logging
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import (
    AllocationMap,
    AssignmentIntervalSet,
    Horizon,
    Instance,
    Interval,
    lambda_intervals,
    lambda_pairwise,
    nu_step,
)
from .solvers import SolverHandle
from .stable_greedy import StableState, stable_allocate

logger = logging.getLogger(__name__)

_ENCLOSURE_SCALE = 1 << 64


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``; floats go through their shortest repr, so 0.05 becomes 1/20."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, numbers.Real) and not isinstance(x, numbers.Rational):
        # numpy scalars repr as np.float64(...), so go through a plain float
        return Fraction(repr(float(x)))
    return Fraction(x)


def _check_c0_args(rho, w) -> Fraction:
    rho = as_fraction(rho)
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    if isinstance(w, bool) or not isinstance(w, numbers.Integral) or w < 1:
        raise ValueError(f"lookahead w must be an integer >= 1, got {w!r}")
    return rho


def compute_c0(rho, w: int) -> float:
    """Positive root of ``w c^2 = rho (w+1) (1-c)`` as a float."""
    rho = _check_c0_args(rho, w)
    r = float(rho)
    return (math.sqrt(r * r * (w + 1) ** 2 + 4 * r * w * (w + 1)) - r * (w + 1)) / (2 * w)


def c0_enclosure(rho, w: int) -> tuple:
    """Rationals ``lo <= c0 <= hi`` with ``hi - lo < 1e-12`` (equal when ``c0`` is rational)."""
    rho = _check_c0_args(rho, w)
    num, den = rho.numerator, rho.denominator
    # sqrt(rho^2 (w+1)^2 + 4 rho w (w+1)) = sqrt(radicand) / den
    radicand = num * num * (w + 1) ** 2 + 4 * num * den * w * (w + 1)
    root = math.isqrt(radicand * _ENCLOSURE_SCALE**2)
    shift = rho * (w + 1)
    lo = (Fraction(root, _ENCLOSURE_SCALE * den) - shift) / (2 * w)
    hi = (Fraction(root + 1, _ENCLOSURE_SCALE * den) - shift) / (2 * w)
    if root * root == radicand * _ENCLOSURE_SCALE**2:
        lo = hi = (Fraction(root, _ENCLOSURE_SCALE * den) - shift) / (2 * w)
    return lo, hi


def c0_at_most(x, rho, w: int) -> bool:
    """Exactly decide ``c0 <= x``.

    ``f(c) = w c^2 + rho (w+1) c - rho (w+1)`` is increasing on ``c >= 0`` with
    ``f(0) < 0`` and ``f(c0) = 0``, so ``c0 <= x`` iff ``x >= 0`` and ``f(x) >= 0``.
    """
    rho = _check_c0_args(rho, w)
    x = as_fraction(x)
    if x < 0:
        return False
    return w * x * x + rho * (w + 1) * x - rho * (w + 1) >= 0


def competitive_ratio(rho, w: int) -> float:
    return (1 - compute_c0(rho, w)) * float(as_fraction(rho))


@dataclass(frozen=True)
class EngineConfig:
    """Lookahead ``w`` and the approximation factor ``rho`` assumed for the solver."""

    w: int
    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rho", _check_c0_args(self.rho, self.w))
        object.__setattr__(self, "w", int(self.w))

    @property
    def c0(self) -> float:
        return compute_c0(self.rho, self.w)

    @property
    def c0_bounds(self) -> tuple:
        return c0_enclosure(self.rho, self.w)

    @classmethod
    def for_solver(cls, w: int, solver: SolverHandle, rho=None) -> "EngineConfig":
        """Config for ``solver``; ``rho`` defaults to its declared factor and may not exceed it."""
        if rho is None:
            if solver.rho is None:
                raise ValueError(f"solver {solver.name!r} declares no approximation factor; pass an assumed rho")
            rho = solver.rho
        rho = as_fraction(rho)
        if solver.rho is not None and rho > solver.rho:
            raise ValueError(f"assumed rho={rho} exceeds the factor {solver.rho} declared by {solver.name!r}")
        return cls(w, rho)


class Choice(str, enum.Enum):
    STABLE = "STABLE"
    APPROX = "APPROX"


@dataclass(frozen=True)
class PeriodRecord:
    """One committed period ``[start, end]`` and the quantities its decision used."""

    start: int
    end: int
    L: int
    R: int
    lambda_S: int
    nu_B: int
    chosen: Choice


class NotReady(LookupError):
    """The lookahead window needed for the requested step has not arrived yet."""


class SequencingError(ValueError):
    """Instances fed out of order, or inconsistent period bookkeeping."""


class SolverFailure(RuntimeError):
    def __init__(self, t: int, cause: BaseException):
        super().__init__(f"single-shot solver failed at t={t}: {cause}")
        self.t = t


def stable_lambda(state: StableState, a: int, b: int, delta: int) -> int:
    """Interval stability value of the current greedy plan over ``[a, b]``."""
    return sum(lambda_intervals(state.interval_set(e), a, b, delta) for e in state.entities)


def candidate_period_end(state: StableState, s: int, w: int) -> int:
    """Smallest candidate end time in ``[s, s+w]``.

    Candidates: ``s+w``; every interval end in ``[s, s+w]``; ``beta - 1`` for
    every interval start ``beta`` in ``[s+1, s+w]``.
    """
    t = s + w
    for e in state.entities:
        for iv in state.intervals(e):
            if s <= iv.end <= s + w:
                t = min(t, iv.end)
            if s + 1 <= iv.start <= s + w:
                t = min(t, iv.start - 1)
    return t


def threshold_prefers_approx(nu_B: int, L: int, lambda_S: int, R: int, config: EngineConfig) -> bool:
    """``nu_B >= L + lambda_S + c0 * R``, decided exactly; equality goes to APPROX."""
    slack = nu_B - L - lambda_S
    if R == 0:
        return slack >= 0
    return c0_at_most(Fraction(slack, R), config.rho, config.w)


def decide_period(
    s: int,
    t: int,
    prev: PeriodRecord | None,
    state: StableState,
    b_allocs: Sequence[AllocationMap],
    instances: Sequence[Instance],
    players: Sequence[str],
    delta: int,
    config: EngineConfig,
) -> PeriodRecord:
    """Compare ``nu(B_{s:t})`` with the stability the greedy plan would collect.

    ``prev`` is the previous period (``None`` when ``s == 1``);
    ``b_allocs`` and ``instances`` hold steps ``s..t`` in order.
    """
    if prev is None:
        if s != 1:
            raise SequencingError(f"period starting at {s} has no predecessor")
    elif prev.end != s - 1:
        raise SequencingError(f"period starts at {s} but the previous one ended at {prev.end}")
    if not s <= t <= s + config.w:
        raise SequencingError(f"period [{s}, {t}] violates s <= t <= s + w")
    if len(b_allocs) != t - s + 1 or len(instances) != t - s + 1:
        raise SequencingError(f"period [{s}, {t}] needs {t - s + 1} solver outputs and instances")

    L = 0
    if prev is not None and s <= prev.start + config.w and prev.chosen is Choice.STABLE:
        L = stable_lambda(state, s - 1, s, delta)
    R = stable_lambda(state, t, t + 1, delta) if t < s + config.w else 0
    lam = stable_lambda(state, s, t, delta)
    nu_B = sum(nu_step(b, inst, players) for b, inst in zip(b_allocs, instances))
    chosen = Choice.APPROX if threshold_prefers_approx(nu_B, L, lam, R, config) else Choice.STABLE
    return PeriodRecord(s, t, L, R, lam, nu_B, chosen)


@dataclass
class RunTrace:
    """Everything a run produced: ``A_{1:tau}``, the periods and the final greedy plan."""

    players: tuple
    entities: tuple
    delta: int
    w: int
    rho: Fraction
    solver: str
    allocations: tuple
    periods: tuple
    solver_calls: int
    stable_intervals: dict
    nu: int
    lambda_intervals: int
    lambda_pairwise: int
    snapshots: dict = field(default_factory=dict)

    @property
    def tau(self) -> int:
        return len(self.allocations)

    @property
    def total_interval(self) -> int:
        return self.nu + self.lambda_intervals

    @property
    def total_pairwise(self) -> int:
        return self.nu + self.lambda_pairwise

    def choice_at(self, t: int) -> Choice:
        for rec in self.periods:
            if rec.start <= t <= rec.end:
                return rec.chosen
        raise IndexError(t)

    def snapshot_at(self, t: int) -> dict:
        """Greedy plan as it stood at the end of step ``t`` (needs ``keep_snapshots``)."""
        starts = [s for s in self.snapshots if s <= t]
        if not starts:
            raise KeyError(f"no snapshot at or before t={t}; run with keep_snapshots=True")
        return self.snapshots[max(starts)]

    def to_dict(self) -> dict:
        return {
            "players": list(self.players),
            "entities": list(self.entities),
            "delta": self.delta,
            "w": self.w,
            "rho": str(self.rho),
            "solver": self.solver,
            "allocations": [{"t": a.t, "assign": dict(sorted(a.assign.items()))} for a in self.allocations],
            "periods": [
                {"start": p.start, "end": p.end, "L": p.L, "R": p.R,
                 "lambda_S": p.lambda_S, "nu_B": p.nu_B, "chosen": p.chosen.value}
                for p in self.periods
            ],
            "solver_calls": self.solver_calls,
            "stable_intervals": {
                e: [list(iv) for iv in s.intervals] for e, s in sorted(self.stable_intervals.items())
            },
            "objective": {
                "nu": self.nu,
                "lambda_intervals": self.lambda_intervals,
                "lambda_pairwise": self.lambda_pairwise,
                "total_interval": self.total_interval,
                "total_pairwise": self.total_pairwise,
            },
        }


def allocation_intervals(
    allocations: Sequence[AllocationMap],
    periods: Sequence[PeriodRecord],
    stable_intervals: dict,
    entities: Sequence[str],
) -> dict:
    """Interval view of the output ``A``.

    Inside STABLE periods ``A`` follows the greedy intervals, cut wherever a
    greedy interval leaves a run of STABLE steps.  Every APPROX step becomes
    a unit interval.
    """
    choice = {}
    for rec in periods:
        for t in range(rec.start, rec.end + 1):
            choice[t] = rec.chosen
    out = {}
    for e in entities:
        pieces = []
        for iv in stable_intervals[e].intervals:
            run_start = None
            for t in range(iv.start, iv.end + 1):
                if choice.get(t) is Choice.STABLE:
                    if run_start is None:
                        run_start = t
                elif run_start is not None:
                    pieces.append(Interval(run_start, t - 1, iv.player))
                    run_start = None
            if run_start is not None:
                pieces.append(Interval(run_start, iv.end, iv.player))
        for alloc in allocations:
            if choice[alloc.t] is Choice.APPROX and e in alloc.assign:
                pieces.append(Interval(alloc.t, alloc.t, alloc.assign[e]))
        pieces.sort()
        out[e] = AssignmentIntervalSet(e, tuple(pieces))
    return out


class MSMaxmin:
    """Online engine fed one instance at a time.

    ``poll(u)`` returns ``A_u`` once ``I_u .. I_{u+w}`` have been fed, or once
    the stream is closed (later steps are then empty).  Committed allocations
    never change.
    """

    def __init__(
        self,
        players: Sequence[str],
        entities: Sequence[str],
        delta: int,
        solver: SolverHandle,
        config: EngineConfig,
        keep_snapshots: bool = False,
    ):
        self.players = tuple(players)
        self.entities = tuple(entities)
        self.delta = delta
        self.solver = solver
        self.config = config
        self.keep_snapshots = keep_snapshots
        self._instances = {}
        self._fed = 0
        self._tau = None
        self._state = StableState(self.entities)
        self._alloc = {}
        self._periods = []
        self._next_start = 1
        self._solver_calls = 0
        self._snapshots = {}

    @property
    def closed(self) -> bool:
        return self._tau is not None

    @property
    def state(self) -> StableState:
        return self._state

    @property
    def periods(self) -> tuple:
        return tuple(self._periods)

    def feed(self, inst: Instance) -> None:
        if self.closed:
            raise SequencingError("stream already closed")
        if inst.t != self._fed + 1:
            raise SequencingError(f"expected instance t={self._fed + 1}, got t={inst.t}")
        players, entities = set(self.players), set(self.entities)
        for e, ps in inst.allowed.items():
            if e not in entities or not ps <= players:
                raise SequencingError(f"t={inst.t}: instance mentions unknown entity or players for {e!r}")
        self._instances[inst.t] = inst
        self._fed = inst.t

    def close(self) -> None:
        if not self.closed:
            self._tau = self._fed

    def _instance(self, t: int) -> Instance:
        if t in self._instances:
            return self._instances[t]
        if self.closed and t > self._tau:
            return Instance.empty(t)
        raise NotReady(f"instance t={t} not yet available")

    def _ready(self, s: int) -> bool:
        if self.closed:
            return s <= self._tau
        return s + self.config.w <= self._fed

    def _run_period(self) -> None:
        s, w = self._next_start, self.config.w
        window = [self._instance(t) for t in range(s, s + w + 1)]
        stable_allocate(self._state, s, w, window, self.players)
        if self.keep_snapshots:
            self._snapshots[s] = self._state.snapshot()
        t = candidate_period_end(self._state, s, w)
        if self.closed:
            # steps past tau are empty: nothing to solve and no stability to gain there
            t = min(t, self._tau)
        instances = window[: t - s + 1]
        b_allocs = []
        for inst in instances:
            try:
                raw = self.solver.solve(inst, self.players, self.entities)
            except Exception as exc:
                raise SolverFailure(inst.t, exc) from exc
            self._solver_calls += 1
            b_allocs.append(raw.restricted_to(inst))
        prev = self._periods[-1] if self._periods else None
        rec = decide_period(s, t, prev, self._state, b_allocs, instances, self.players, self.delta, self.config)
        logger.debug("period %s", rec)
        for j, b in zip(range(s, t + 1), b_allocs):
            if rec.chosen is Choice.APPROX:
                self._alloc[j] = b
            else:
                assign = {}
                for e in self.entities:
                    p = self._state.player_at(e, j)
                    if p is not None:
                        assign[e] = p
                self._alloc[j] = AllocationMap(j, assign)
        self._periods.append(rec)
        self._next_start = t + 1

    def advance(self) -> None:
        """Commit every period whose lookahead window is available."""
        while self._ready(self._next_start):
            self._run_period()

    def poll(self, u: int) -> AllocationMap:
        if u < 1 or (self.closed and u > self._tau):
            raise IndexError(f"no time step {u} in this stream")
        if u not in self._alloc:
            self.advance()
        if u not in self._alloc:
            raise NotReady(f"A_{u} needs instances through t={u + self.config.w}; fed through {self._fed}")
        return self._alloc[u]

    def trace(self) -> RunTrace:
        if not self.closed:
            raise NotReady("close the stream before asking for the trace")
        self.advance()
        tau = self._tau
        allocations = tuple(self._alloc[t] for t in range(1, tau + 1))
        final = self._state.interval_sets()
        nu = sum(nu_step(a, self._instances[a.t], self.players) for a in allocations)
        a_ivs = allocation_intervals(allocations, self._periods, final, self.entities)
        lam_iv = sum(lambda_intervals(s, 1, tau, self.delta) for s in a_ivs.values()) if tau else 0
        lam_pw = lambda_pairwise(allocations, self.delta, 1, tau) if tau else 0
        return RunTrace(
            players=self.players,
            entities=self.entities,
            delta=self.delta,
            w=self.config.w,
            rho=self.config.rho,
            solver=self.solver.name,
            allocations=allocations,
            periods=tuple(self._periods),
            solver_calls=self._solver_calls,
            stable_intervals=final,
            nu=nu,
            lambda_intervals=lam_iv,
            lambda_pairwise=lam_pw,
            snapshots=dict(self._snapshots),
        )


def run(horizon: Horizon, solver: SolverHandle, config: EngineConfig, keep_snapshots: bool = False) -> RunTrace:
    """Run the online algorithm over a fully known horizon."""
    engine = MSMaxmin(horizon.players, horizon.entities, horizon.delta, solver, config, keep_snapshots)
    for inst in horizon.instances:
        engine.feed(inst)
    engine.close()
    return engine.trace()
