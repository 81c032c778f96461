"""Ground truth for small problems: sampled violation probability and exhaustive optima."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundMethod, bound_from_stats, check_admissible
from .instance import (
    CCInstance,
    Deterministic,
    Normal,
    UniformAdditive,
    UniformRelative,
    WeightStats,
    as_solution,
)

MAX_EXHAUSTIVE_N = 24
_CHUNK = 1 << 16


@dataclass(frozen=True)
class MCEstimate:
    p_hat: float
    samples: int
    std_error: float


def sample_weights(inst: CCInstance, x, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw W(X) ``samples`` times; returns a 1-d array of total weights."""
    bits = as_solution(x, inst.n)
    a = inst.expected_weights[bits]
    model = inst.model
    if a.size == 0:
        return np.zeros(samples)
    if isinstance(model, Deterministic):
        return np.full(samples, a.sum())
    if isinstance(model, UniformAdditive):
        u = rng.uniform(-1.0, 1.0, size=(samples, a.size))
        return (a + model.delta * u).sum(axis=1)
    if isinstance(model, UniformRelative):
        u = rng.uniform(-1.0, 1.0, size=(samples, a.size))
        return (a * (1.0 + model.beta * u)).sum(axis=1)
    if isinstance(model, Normal):
        sd = np.sqrt(np.asarray(model.variances)[bits])
        z = rng.standard_normal(size=(samples, a.size))
        return (a + sd * z).sum(axis=1)
    raise TypeError(f"unsupported weight model {model!r}")


def mc_violation(inst: CCInstance, x, samples: int = 100_000, seed: int = 0) -> MCEstimate:
    """Monte-Carlo estimate of Pr(W(X) >= B)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        hits += int((sample_weights(inst, x, m, rng) >= inst.capacity).sum())
        done += m
    p = hits / samples
    return MCEstimate(p, samples, math.sqrt(p * (1.0 - p) / samples))


def _enumerate(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    # item 0 is the most significant bit: code order == lexicographic order
    return ((codes[:, None] >> shifts) & 1).astype(bool)


def exhaustive_optimum(inst: CCInstance, method: BoundMethod = BoundMethod.CANTELLI):
    """Best (bits, profit) with violation_bound <= alpha, by full enumeration.

    Ties in profit go to the lexicographically smallest bit string.
    """
    check_admissible(method, inst.model)
    n = inst.n
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive search supports n <= {MAX_EXHAUSTIVE_N}, got {n}")
    a = inst.expected_weights
    scale, q = inst.variance_units()
    p = inst.profits
    best_code, best_profit = 0, 0  # the empty set is always feasible
    for start in range(0, 1 << n, _CHUNK):
        stop = min(start + _CHUNK, 1 << n)
        bits = _enumerate(n, start, stop)
        prof = bits.astype(np.int64) @ p
        cand = np.flatnonzero(prof > best_profit)
        if cand.size == 0:
            continue
        e = bits[cand].astype(float) @ a
        var = scale * (bits[cand].astype(float) @ q)
        cnt = bits[cand].sum(axis=1)
        # descending profit, then ascending code
        order = np.lexsort((cand, -prof[cand]))
        for j in order:
            pj = int(prof[cand[j]])
            if pj <= best_profit:
                break
            stats = WeightStats(float(e[j]), float(var[j]), int(cnt[j]))
            if bound_from_stats(inst, method, stats) <= inst.alpha:
                best_code, best_profit = start + int(cand[j]), pj
                break
    return _enumerate(n, best_code, best_code + 1)[0], best_profit
