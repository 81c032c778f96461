"""Lexicographic single-objective fitness and the bi-objective GSEMO fitness."""
from __future__ import annotations

from typing import NamedTuple

from .bounds import BoundMethod, bound_from_stats, check_admissible
from .instance import CCInstance, Deterministic, WeightStats, profit, weight_stats

BETTER, EQUAL, WORSE = 1, 0, -1


class SOFitness(NamedTuple):
    u: float  # expected-weight excess, minimized
    v: float  # bound excess over alpha, minimized
    p: int  # profit, maximized

    def key(self) -> tuple[float, float, int]:
        """Sort key; larger is better."""
        return (-self.u, -self.v, self.p)

    @property
    def feasible(self) -> bool:
        return self.u == 0 and self.v == 0


class MOFitness(NamedTuple):
    g1: float  # profit if chance-feasible else -1, maximized
    g2: float  # violation bound, or 1 + expected excess, minimized


def so_from_stats(inst: CCInstance, method: BoundMethod, stats: WeightStats, prof: int) -> SOFitness:
    u = max(stats.expected - inst.capacity, 0.0)
    v = max(bound_from_stats(inst, method, stats) - inst.alpha, 0.0)
    return SOFitness(u, v, prof)


def mo_from_stats(inst: CCInstance, method: BoundMethod, stats: WeightStats, prof: int) -> MOFitness:
    below = stats.expected < inst.capacity or (
        isinstance(inst.model, Deterministic) and stats.expected == inst.capacity
    )
    if below:
        g2 = bound_from_stats(inst, method, stats)
    else:
        g2 = 1.0 + (stats.expected - inst.capacity)
    g1 = prof if g2 <= inst.alpha else -1
    return MOFitness(g1, g2)


def so_fitness(inst: CCInstance, x, method: BoundMethod) -> SOFitness:
    check_admissible(method, inst.model)
    return so_from_stats(inst, method, weight_stats(inst, x), profit(inst, x))


def mo_fitness(inst: CCInstance, x, method: BoundMethod) -> MOFitness:
    check_admissible(method, inst.model)
    return mo_from_stats(inst, method, weight_stats(inst, x), profit(inst, x))


def so_compare(f1: SOFitness, f2: SOFitness) -> int:
    """BETTER, EQUAL or WORSE for f1 relative to f2 in lexicographic order."""
    k1, k2 = f1.key(), f2.key()
    if k1 > k2:
        return BETTER
    if k1 == k2:
        return EQUAL
    return WORSE


def mo_dominates(a: MOFitness, b: MOFitness) -> bool:
    """Weak dominance: a is at least as good as b in both objectives."""
    return a.g1 >= b.g1 and a.g2 <= b.g2
