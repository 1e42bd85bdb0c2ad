"""Domain types for multistage maxmin allocation and the objective calculus.

Time steps are 1-based. Players and entities are identified by strings; the
horizon fixes their order, and that order is used for every tie-break.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence


class ValidationError(ValueError):
    """Raised when an instance or allocation violates the model invariants."""


@dataclass(frozen=True, eq=True)
class Instance:
    """Restriction lists and values of one time step.

    ``allowed[e]`` is the set of players entity ``e`` may go to at step ``t``;
    ``values[(e, p)]`` is the integer value of ``e`` to ``p``.  Pairs that are
    missing from ``values`` are worth 0.  Zero entries are dropped at
    construction so two instances compare equal iff they mean the same thing.
    """

    t: int
    allowed: Mapping[str, frozenset] = field(default_factory=dict)
    values: Mapping[tuple, int] = field(default_factory=dict)

    def __post_init__(self):
        allowed = {e: frozenset(ps) for e, ps in self.allowed.items() if ps}
        values = {}
        for (e, p), v in self.values.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValidationError(f"t={self.t}: value of ({e}, {p}) must be an integer, got {v!r}")
            if v < 0:
                raise ValidationError(f"t={self.t}: negative value {v} for ({e}, {p})")
            if p not in allowed.get(e, ()):
                if v == 0:
                    continue
                raise ValidationError(f"t={self.t}: value given for ({e}, {p}) but {p} not in L(e)")
            if v:
                values[(e, p)] = v
        object.__setattr__(self, "allowed", allowed)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, t: int) -> "Instance":
        return cls(t)

    def allowed_players(self, e: str) -> frozenset:
        return self.allowed.get(e, frozenset())

    def value(self, e: str, p: str) -> int:
        return self.values.get((e, p), 0)

    def is_empty(self) -> bool:
        return not self.allowed


@dataclass(frozen=True)
class Horizon:
    """Players, entities, stability reward and the instances ``I_1..I_tau``."""

    players: tuple
    entities: tuple
    delta: int
    instances: tuple

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "instances", tuple(self.instances))
        if not self.players:
            raise ValidationError("a horizon needs at least one player")
        if len(set(self.players)) != len(self.players) or len(set(self.entities)) != len(self.entities):
            raise ValidationError("duplicate player or entity ids")
        if isinstance(self.delta, bool) or not isinstance(self.delta, int) or self.delta < 0:
            raise ValidationError(f"delta must be a non-negative integer, got {self.delta!r}")
        players, entities = set(self.players), set(self.entities)
        for k, inst in enumerate(self.instances):
            if inst.t != k + 1:
                raise ValidationError(f"instance at position {k} has t={inst.t}, expected {k + 1}")
            for e, ps in inst.allowed.items():
                if e not in entities:
                    raise ValidationError(f"t={inst.t}: unknown entity {e!r}")
                unknown = ps - players
                if unknown:
                    raise ValidationError(f"t={inst.t}: unknown players {sorted(unknown)} for {e!r}")

    @property
    def tau(self) -> int:
        return len(self.instances)

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return len(self.entities)

    def instance(self, t: int) -> Instance:
        """Instance at step ``t``; steps past ``tau`` are empty."""
        if t < 1:
            raise IndexError(f"time step {t} < 1")
        if t > self.tau:
            return Instance.empty(t)
        return self.instances[t - 1]

    def window(self, a: int, b: int) -> list:
        return [self.instance(t) for t in range(a, b + 1)]


@dataclass(frozen=True)
class AllocationMap:
    """Partial assignment of entities to players at step ``t``.

    An unassigned entity is simply absent from ``assign``.
    """

    t: int
    assign: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assign", dict(self.assign))

    def validate(self, inst: Instance) -> None:
        if inst.t != self.t:
            raise ValidationError(f"allocation for t={self.t} checked against instance t={inst.t}")
        for e, p in self.assign.items():
            if p not in inst.allowed_players(e):
                raise ValidationError(f"t={self.t}: entity {e!r} assigned to {p!r} outside its restriction list")

    def restricted_to(self, inst: Instance) -> "AllocationMap":
        """Drop pairs that violate the restriction lists of ``inst``."""
        return AllocationMap(self.t, {e: p for e, p in self.assign.items() if p in inst.allowed_players(e)})


class Interval(NamedTuple):
    start: int
    end: int
    player: str


@dataclass(frozen=True)
class AssignmentIntervalSet:
    """Disjoint assignment intervals of one entity, sorted by start.

    Touching intervals with the same player are legal and are kept apart: no
    stability reward is earned across their junction.
    """

    entity: str
    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple(Interval(*iv) for iv in self.intervals)
        for iv in ivs:
            if iv.start > iv.end:
                raise ValidationError(f"{self.entity}: interval {iv} has start > end")
        for prev, cur in zip(ivs, ivs[1:]):
            if cur.start <= prev.end:
                raise ValidationError(f"{self.entity}: intervals {prev} and {cur} overlap or are unsorted")
        object.__setattr__(self, "intervals", ivs)

    def player_at(self, t: int):
        for iv in self.intervals:
            if iv.start <= t <= iv.end:
                return iv.player
        return None

    def starts(self) -> list:
        return [iv.start for iv in self.intervals]

    def ends(self) -> list:
        return [iv.end for iv in self.intervals]


class Objective(NamedTuple):
    nu: int
    lam: int
    total: int


def nu_step(alloc: AllocationMap, inst: Instance, players: Sequence[str]) -> int:
    """Minimum over ``players`` of the total value each receives under ``alloc``."""
    if not players:
        raise ValidationError("nu_step needs at least one player")
    alloc.validate(inst)
    loads = dict.fromkeys(players, 0)
    for e, p in alloc.assign.items():
        if p not in loads:
            raise ValidationError(f"t={alloc.t}: unknown player {p!r}")
        loads[p] += inst.value(e, p)
    return min(loads.values())


def nu_sum(allocs: Sequence[AllocationMap], horizon: Horizon, a: int, b: int) -> int:
    """Sum of ``nu_step`` over ``[a, b]``; ``allocs[k]`` is the allocation of step ``k + 1``."""
    if not 1 <= a <= b <= horizon.tau:
        raise ValidationError(f"range [{a}, {b}] outside [1, {horizon.tau}]")
    if len(allocs) < b:
        raise ValidationError(f"only {len(allocs)} allocations for range ending at {b}")
    return sum(nu_step(allocs[t - 1], horizon.instance(t), horizon.players) for t in range(a, b + 1))


def lambda_intervals(iset: AssignmentIntervalSet, a: int, b: int, delta: int) -> int:
    """Interval stability value of one entity over ``[a, b]``.

    Counts unit steps ``[t, t+1]`` with ``a <= t < b`` that lie inside a single
    assignment interval.
    """
    if a > b:
        raise ValidationError(f"empty range [{a}, {b}]")
    steps = 0
    for iv in iset.intervals:
        lo, hi = max(iv.start, a), min(iv.end, b)
        if hi > lo:
            steps += hi - lo
    return delta * steps


def lambda_intervals_total(isets: Iterable[AssignmentIntervalSet], a: int, b: int, delta: int) -> int:
    return sum(lambda_intervals(s, a, b, delta) for s in isets)


def lambda_pairwise(allocs: Sequence[AllocationMap], delta: int, a: int, b: int) -> int:
    """Stability term of the reported objective: ``delta`` per pair kept from ``t`` to ``t+1``."""
    if a > b:
        raise ValidationError(f"empty range [{a}, {b}]")
    kept = 0
    for t in range(a, b):
        cur, nxt = allocs[t - 1].assign, allocs[t].assign
        kept += sum(1 for e, p in cur.items() if nxt.get(e) == p)
    return delta * kept


def total_objective(allocs: Sequence[AllocationMap], horizon: Horizon) -> Objective:
    """``nu`` over ``[1, tau]`` plus the pairwise stability reward."""
    tau = horizon.tau
    if len(allocs) != tau:
        raise ValidationError(f"expected {tau} allocations, got {len(allocs)}")
    for k, alloc in enumerate(allocs):
        if alloc.t != k + 1:
            raise ValidationError(f"allocation at position {k} has t={alloc.t}")
    if tau == 0:
        return Objective(0, 0, 0)
    nu = nu_sum(allocs, horizon, 1, tau)
    lam = lambda_pairwise(allocs, horizon.delta, 1, tau)
    return Objective(nu, lam, nu + lam)


def maximal_runs(allocs: Sequence[AllocationMap], entity: str) -> AssignmentIntervalSet:
    """Interval view of ``allocs`` for ``entity`` with same-player runs merged."""
    intervals = []
    for alloc in allocs:
        p = alloc.assign.get(entity)
        if p is None:
            continue
        if intervals and intervals[-1][2] == p and intervals[-1][1] == alloc.t - 1:
            intervals[-1][1] = alloc.t
        else:
            intervals.append([alloc.t, alloc.t, p])
    return AssignmentIntervalSet(entity, tuple(Interval(*iv) for iv in intervals))
