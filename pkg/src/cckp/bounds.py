"""Upper bounds on the capacity-violation probability Pr(W(X) >= B).

All functions return a value in [0, 1]. When the expected weight is at or
above the capacity neither inequality applies and the sentinel 1 is returned.
"""
from __future__ import annotations

import logging
import math
from enum import Enum

from .instance import (
    CCInstance,
    Deterministic,
    UniformAdditive,
    WeightStats,
    weight_stats,
)

log = logging.getLogger(__name__)


class BoundMethod(str, Enum):
    CANTELLI = "cantelli"
    CHERNOFF = "chernoff"


class InadmissibleMethod(ValueError):
    pass


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def cantelli_value(expected: float, variance: float, capacity: float) -> float:
    """One-sided Chebyshev: Var / (Var + (B - E)^2) for E < B."""
    if expected >= capacity:
        return 1.0
    if variance == 0.0:
        return 0.0
    gap = capacity - expected
    return _clamp(variance / (variance + gap * gap))


def cantelli(stats: WeightStats, capacity: float) -> float:
    return cantelli_value(stats.expected, stats.variance, capacity)


def cantelli_uniform_additive(delta: float, count: int, expected: float, capacity: float) -> float:
    """Cantelli for w_i ~ U[a_i - delta, a_i + delta]."""
    if expected >= capacity:
        return 1.0
    spread = delta * delta * count
    if spread == 0.0:
        return 0.0
    gap = capacity - expected
    return _clamp(spread / (spread + 3.0 * gap * gap))


def cantelli_uniform_relative(beta: float, expected: float, capacity: float) -> float:
    """Cantelli for w_i ~ U[(1 - beta) a_i, (1 + beta) a_i].

    Bounds sum(a_i^2) by E^2, so this is never tighter than cantelli() on
    the exact variance.
    """
    if expected >= capacity:
        return 1.0
    spread = 4.0 * beta * beta * expected * expected
    if spread == 0.0:
        return 0.0
    gap = 2.0 * math.sqrt(3.0) * (capacity - expected)
    return _clamp(spread / (spread + gap * gap))


def chernoff_log_base(eps: float) -> float:
    """ln(e^eps / (1 + eps)^(1 + eps))."""
    return eps - (1.0 + eps) * math.log1p(eps)


def chernoff_uniform_additive(delta: float, count: int, expected: float, capacity: float) -> float:
    """Chernoff bound on the [0, 1]-normalized item weights.

    With eps = (B - E) / (delta * count) the bound is
    exp((count / 2) * (eps - (1 + eps) ln(1 + eps))).
    """
    if expected >= capacity:
        return 1.0
    if count == 0:
        return 0.0
    if delta <= 0.0:
        raise ValueError("Chernoff requires nonzero interval width")
    width = delta * count
    # W is supported on [E - width, E + width]
    if capacity >= expected + width:
        return 0.0
    eps = (capacity - expected) / width
    return _clamp(math.exp(0.5 * count * chernoff_log_base(eps)))


def _log_c(eps: float, expected: float) -> float:
    return expected * chernoff_log_base(eps)


def crossover_variance(eps: float, expected: float) -> float:
    """Variance at which the Chernoff and Cantelli estimates coincide.

    Var* = C (eps E)^2 / (1 - C) with C = (e^eps / (1 + eps)^(1 + eps))^E.
    """
    if eps <= 0 or expected <= 0:
        raise ValueError("crossover_variance needs eps > 0 and E > 0")
    log_c = _log_c(eps, expected)
    one_minus_c = -math.expm1(log_c)
    if one_minus_c <= 0.0:
        raise ValueError(f"C rounds to 1 for eps={eps}, E={expected}")
    return math.exp(log_c) * (eps * expected) ** 2 / one_minus_c


def preferred_bound(eps: float, expected: float, variance: float) -> BoundMethod:
    """Chernoff when its estimate is no larger than Cantelli's, else Cantelli."""
    try:
        threshold = crossover_variance(eps, expected)
    except ValueError:
        log.warning("crossover undefined at eps=%g E=%g; defaulting to Cantelli", eps, expected)
        return BoundMethod.CANTELLI
    return BoundMethod.CHERNOFF if threshold <= variance else BoundMethod.CANTELLI


def normalized_preference(delta: float, count: int, expected: float, capacity: float) -> BoundMethod:
    """preferred_bound in the [0, 1]-normalized space of the additive model.

    Item weights map to y_i in [0, 1] with mean 1/2 and variance 1/12, and
    eps = (B - E) / (delta * count). Cantelli is affine invariant, so the
    answer decides between the two additive-model bounds directly.
    """
    eps = (capacity - expected) / (delta * count)
    return preferred_bound(eps, count / 2.0, count / 12.0)


def admissible(method: BoundMethod, model) -> bool:
    if BoundMethod(method) is BoundMethod.CANTELLI:
        return True
    return isinstance(model, (UniformAdditive, Deterministic))


def check_admissible(method: BoundMethod, model) -> None:
    if not admissible(method, model):
        raise InadmissibleMethod(
            f"inadmissible method: chernoff needs a shared interval width, not {type(model).__name__}"
        )


def bound_from_stats(inst: CCInstance, method: BoundMethod, stats: WeightStats) -> float:
    model = inst.model
    if isinstance(model, Deterministic):
        # exactly full is feasible for fixed weights
        return 1.0 if stats.expected > inst.capacity else 0.0
    if BoundMethod(method) is BoundMethod.CHERNOFF:
        check_admissible(method, model)
        return chernoff_uniform_additive(model.delta, stats.count, stats.expected, inst.capacity)
    return cantelli(stats, inst.capacity)


def violation_bound(inst: CCInstance, x, method: BoundMethod) -> float:
    check_admissible(method, inst.model)
    return bound_from_stats(inst, method, weight_stats(inst, x))


def crossover_grid(eps_values, expected_grid) -> list[tuple[float, float, float | None]]:
    """(eps, E, Var*) rows; Var* is None where C rounds to 1."""
    rows = []
    for eps in eps_values:
        for e in expected_grid:
            try:
                v = crossover_variance(float(eps), float(e))
            except ValueError:
                v = None
            rows.append((float(eps), float(e), v))
    return rows


__all__ = [
    "BoundMethod",
    "InadmissibleMethod",
    "admissible",
    "bound_from_stats",
    "cantelli",
    "cantelli_value",
    "cantelli_uniform_additive",
    "cantelli_uniform_relative",
    "chernoff_uniform_additive",
    "crossover_grid",
    "crossover_variance",
    "normalized_preference",
    "preferred_bound",
    "violation_bound",
]
