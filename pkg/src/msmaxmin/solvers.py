"""Single-shot maxmin allocation solvers.

A solver maps one :class:`Instance` to an :class:`AllocationMap`.  The engine
only relies on the :class:`SolverHandle` contract, so approximation
algorithms with a proven factor can be registered later.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .model import AllocationMap, Instance


class SolverSizeError(ValueError):
    """The instance is too large for the exact solver."""


@dataclass(frozen=True)
class SolverHandle:
    """A named solver with its declared approximation factor.

    ``rho`` is ``None`` for solvers without a guarantee; the engine then needs
    an assumed factor from the caller.
    """

    name: str
    rho: Fraction | None
    solve: Callable[[Instance, Sequence[str], Sequence[str]], AllocationMap]


def _loads(inst: Instance, assign: dict, players: Sequence[str]) -> dict:
    loads = dict.fromkeys(players, 0)
    for e, p in assign.items():
        loads[p] += inst.value(e, p)
    return loads


def solve_greedy_heuristic(inst: Instance, players: Sequence[str], entities: Sequence[str]) -> AllocationMap:
    """Hand the poorest player its most valuable remaining allowed entity, repeatedly.

    A player with nothing left to take drops out of the rotation.  Entities
    nobody poor wanted go to the allowed player valuing them most.  No
    approximation guarantee.
    """
    remaining = [e for e in entities if inst.allowed_players(e)]
    assign = {}
    loads = dict.fromkeys(players, 0)
    active = list(players)
    while remaining and active:
        poorest = min(active, key=lambda p: loads[p])
        options = [e for e in remaining if poorest in inst.allowed_players(e)]
        if not options:
            active.remove(poorest)
            continue
        best = max(options, key=lambda e: inst.value(e, poorest))
        assign[best] = poorest
        loads[poorest] += inst.value(best, poorest)
        remaining.remove(best)
    for e in remaining:
        allowed = [p for p in players if p in inst.allowed_players(e)]
        assign[e] = max(allowed, key=lambda p: inst.value(e, p))
    return AllocationMap(inst.t, assign)


def solve_exact(
    inst: Instance,
    players: Sequence[str],
    entities: Sequence[str],
    max_entities: int = 12,
    max_players: int = 6,
) -> AllocationMap:
    """Optimal single-shot maxmin allocation by branch and bound.

    Every entity with a non-empty restriction list is assigned (values are
    non-negative, so assigning never lowers the minimum).  Entities are
    branched in decreasing order of their best value; a node is pruned when
    some player cannot beat the incumbent even if it received every remaining
    entity it may take.
    """
    players = list(players)
    live = [e for e in entities if inst.allowed_players(e)]
    if len(live) > max_entities or len(players) > max_players:
        raise SolverSizeError(
            f"t={inst.t}: {len(live)} entities / {len(players)} players exceed the exact solver caps "
            f"({max_entities}/{max_players}); use the greedy heuristic"
        )
    n = len(players)
    if not live or n == 0:
        return AllocationMap(inst.t, {})

    order = sorted(live, key=lambda e: -max(inst.value(e, p) for p in inst.allowed_players(e)))
    choices = []
    for e in order:
        opts = [k for k, p in enumerate(players) if p in inst.allowed_players(e)]
        opts.sort(key=lambda k: -inst.value(e, players[k]))
        choices.append([(k, inst.value(e, players[k])) for k in opts])
    # suffix[d][k]: value still reachable by player k from entities d..end
    suffix = [[0] * n for _ in range(len(order) + 1)]
    for d in range(len(order) - 1, -1, -1):
        row = list(suffix[d + 1])
        for k, v in choices[d]:
            row[k] += v
        suffix[d] = row

    seed = solve_greedy_heuristic(inst, players, entities)
    seed_loads = _loads(inst, seed.assign, players)
    best_value = min(seed_loads.values())
    best_assign = [players.index(seed.assign[e]) for e in order]
    loads = [0] * n
    current = [0] * len(order)

    def search(d: int) -> None:
        nonlocal best_value, best_assign
        if d == len(order):
            value = min(loads)
            if value > best_value:
                best_value = value
                best_assign = list(current)
            return
        bound = min(loads[k] + suffix[d][k] for k in range(n))
        if bound <= best_value:
            return
        for k, v in choices[d]:
            loads[k] += v
            current[d] = k
            search(d + 1)
            loads[k] -= v

    search(0)
    return AllocationMap(inst.t, {e: players[k] for e, k in zip(order, best_assign)})


EXACT = SolverHandle("exact", Fraction(1), solve_exact)
GREEDY = SolverHandle("greedy", None, solve_greedy_heuristic)

_REGISTRY = {h.name: h for h in (EXACT, GREEDY)}


def get_solver(name: str) -> SolverHandle:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(_REGISTRY)}") from None


def available_solvers() -> list:
    return sorted(_REGISTRY)
