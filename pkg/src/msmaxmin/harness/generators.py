"""Random and adversarial horizon generators.

All randomness comes from one ``numpy.random.Generator`` seeded by the caller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Horizon, Instance, ValidationError


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    m: int
    tau: int
    w: int = 1
    delta: int = 1
    value_max: int = 5
    availability_density: float = 0.5
    churn: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "m", "tau", "w"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.delta < 0 or self.value_max < 0:
            raise ValidationError("delta and value_max must be non-negative")
        for name in ("availability_density", "churn"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


def player_names(n: int) -> tuple:
    return tuple(f"p{k + 1}" for k in range(n))


def entity_names(m: int) -> tuple:
    return tuple(f"e{k + 1}" for k in range(m))


def gen_random(params: GeneratorParams) -> Horizon:
    """Random horizon whose restriction lists persist between steps unless churned.

    Each entity draws its allowed set with ``availability_density`` per player
    at step 1; at every later step it redraws with probability ``churn`` and
    otherwise keeps the previous set.  Values of allowed pairs are drawn
    uniformly from ``0..value_max`` at every step.
    """
    rng = np.random.default_rng(params.seed)
    players, entities = player_names(params.n), entity_names(params.m)
    current = {}
    instances = []
    for t in range(1, params.tau + 1):
        allowed = {}
        for e in entities:
            if t == 1 or rng.random() < params.churn:
                mask = rng.random(params.n) < params.availability_density
                current[e] = frozenset(p for p, keep in zip(players, mask) if keep)
            allowed[e] = current[e]
        values = {}
        for e in entities:
            for p in players:
                if p in allowed[e]:
                    values[(e, p)] = int(rng.integers(0, params.value_max + 1))
        instances.append(Instance(t, allowed, values))
    return Horizon(players, entities, params.delta, tuple(instances))


def gen_adversarial_flipflop(n: int, m: int, tau: int, delta: int = 1, value: int = 1) -> Horizon:
    """Every entity alternates between two different single players.

    Entity ``k`` may only go to ``p_{k mod n}`` at odd steps and to
    ``p_{(k+1) mod n}`` at even steps, so no assignment can be kept from one
    step to the next.
    """
    if n < 2:
        raise ValidationError("the flip-flop family needs n >= 2")
    players, entities = player_names(n), entity_names(m)
    instances = []
    for t in range(1, tau + 1):
        allowed, values = {}, {}
        for k, e in enumerate(entities):
            p = players[(k + (t + 1) % 2) % n]
            allowed[e] = {p}
            values[(e, p)] = value
        instances.append(Instance(t, allowed, values))
    return Horizon(players, entities, delta, tuple(instances))
