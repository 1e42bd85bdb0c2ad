"""Greedy per-entity stability maximisation over a lookahead window.

For one entity the greedy repeatedly starts an assignment interval at the
earliest step where the entity can be assigned at all, choosing the player
that stays available for the longest run.  The "longest run containing step
i" query is answered by :class:`AvailabilityIndex`, a static stabbing-max
structure over the maximal availability runs of every player.
"""
from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from .model import AssignmentIntervalSet, Instance, Interval


class AvailabilityIndex:
    """Maximal availability runs of one entity inside a window ``[a, b]``.

    ``stab(i)`` returns ``(player, end)`` for the run containing ``i`` with the
    largest right endpoint, ties going to the player listed first, or ``None``
    when no player can take the entity at ``i``.

    Runs are sorted by start and a prefix maximum of ``(end, -player_rank)`` is
    kept, so a query is a single bisection.  This works because any run that
    contains ``i`` starts at or before ``i``; if the best run starting at or
    before ``i`` ends before ``i``, nothing contains it.
    """

    def __init__(self, entity: str, a: int, runs: Sequence[tuple], players: Sequence[str]):
        self.entity = entity
        self.a = a
        self.players = tuple(players)
        rank = {p: k for k, p in enumerate(self.players)}
        self.runs = sorted(runs, key=lambda r: (r[0], rank[r[2]]))
        self._starts = [r[0] for r in self.runs]
        self._best = []
        best = None
        for start, end, p in self.runs:
            key = (end, -rank[p])
            if best is None or key > best[0]:
                best = (key, p)
            self._best.append((best[0][0], best[1]))

    def stab(self, i: int):
        k = bisect_right(self._starts, i)
        if k == 0:
            return None
        end, p = self._best[k - 1]
        if end < i:
            return None
        return p, end

    def stab_scan(self, i: int):
        """Linear-scan answer to :meth:`stab`; kept as a test oracle."""
        rank = {p: k for k, p in enumerate(self.players)}
        best = None
        for start, end, p in self.runs:
            if start <= i <= end and (best is None or (end, -rank[p]) > (best[1], -rank[best[0]])):
                best = (p, end)
        return best


def availability_runs(entity: str, a: int, window: Sequence[Instance], players: Sequence[str]) -> list:
    """Maximal runs ``(start, end, player)`` of consecutive steps with ``player`` in ``L_t(entity)``."""
    runs = []
    for p in players:
        start = None
        for k, inst in enumerate(window):
            t = a + k
            if p in inst.allowed_players(entity):
                if start is None:
                    start = t
            elif start is not None:
                runs.append((start, t - 1, p))
                start = None
        if start is not None:
            runs.append((start, a + len(window) - 1, p))
    return runs


def build_index(entity: str, a: int, window: Sequence[Instance], players: Sequence[str]) -> AvailabilityIndex:
    """Index over the window ``window[k] = I_{a+k}``."""
    if not window:
        raise ValueError("window must contain at least one instance")
    for k, inst in enumerate(window):
        if inst.t != a + k:
            raise ValueError(f"window is not contiguous from {a}: position {k} holds t={inst.t}")
    return AvailabilityIndex(entity, a, availability_runs(entity, a, window, players), players)


def stable_entity(
    entity: str,
    a: int,
    b: int,
    window: Sequence[Instance],
    players: Sequence[str],
    index: AvailabilityIndex | None = None,
) -> AssignmentIntervalSet:
    """Greedy assignment intervals of ``entity`` in ``[a, b]``.

    ``window[k]`` must be the instance of step ``a + k`` and cover ``[a, b]``.
    """
    window = list(window[: b - a + 1])
    if len(window) != b - a + 1:
        raise ValueError(f"window has {len(window)} instances, need {b - a + 1} for [{a}, {b}]")
    if index is None:
        index = build_index(entity, a, window, players)
    intervals = []
    i = a
    while i <= b:
        hit = index.stab(i)
        if hit is None:
            i += 1
            continue
        p, end = hit
        intervals.append(Interval(i, end, p))
        i = end + 1
    return AssignmentIntervalSet(entity, tuple(intervals))


class StableState:
    """The evolving greedy plan: one interval list per entity."""

    def __init__(self, entities: Iterable[str]):
        self._intervals = {e: [] for e in entities}

    @property
    def entities(self) -> tuple:
        return tuple(self._intervals)

    def intervals(self, e: str) -> tuple:
        return tuple(self._intervals[e])

    def interval_set(self, e: str) -> AssignmentIntervalSet:
        return AssignmentIntervalSet(e, tuple(self._intervals[e]))

    def interval_sets(self) -> dict:
        return {e: self.interval_set(e) for e in self._intervals}

    def carries_over(self, e: str, a: int) -> bool:
        """True if an interval of ``e`` starts before ``a`` and contains ``a``."""
        return any(iv.start < a <= iv.end for iv in self._intervals[e])

    def replace_from(self, e: str, a: int, new: Sequence[Interval]) -> None:
        kept = [iv for iv in self._intervals[e] if iv.end < a]
        self._intervals[e] = kept + list(new)

    def player_at(self, e: str, t: int):
        for iv in self._intervals[e]:
            if iv.start <= t <= iv.end:
                return iv.player
        return None

    def snapshot(self) -> dict:
        return {e: tuple(ivs) for e, ivs in self._intervals.items()}


def stable_allocate(
    state: StableState,
    a: int,
    w: int,
    window: Sequence[Instance],
    players: Sequence[str],
) -> StableState:
    """Recompute ``S_{a:a+w}`` for every entity without an interval carried over into ``a``.

    ``window[k]`` is ``I_{a+k}`` for ``k = 0..w`` (empty instances past the horizon).
    The state is updated in place and returned.
    """
    window = list(window)
    if len(window) < w + 1:
        raise ValueError(f"window holds {len(window)} instances, need {w + 1}")
    for e in state.entities:
        if state.carries_over(e, a):
            continue
        result = stable_entity(e, a, a + w, window, players)
        state.replace_from(e, a, result.intervals)
    return state
