"""Nonparametric comparison of run outcomes."""
from __future__ import annotations

import numpy as np
from scipy import stats as sps

FIRST_BETTER, SECOND_BETTER, NO_DIFFERENCE = "+", "-", "·"


def midranks(values: np.ndarray) -> np.ndarray:
    return sps.rankdata(values, method="average")


def kruskal_wallis(groups) -> tuple[float, float]:
    """Kruskal-Wallis H with tie correction and its chi-square p-value."""
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2 or any(g.size == 0 for g in groups):
        raise ValueError("kruskal_wallis needs at least two nonempty groups")
    pooled = np.concatenate(groups)
    big_n = pooled.size
    ranks = midranks(pooled)
    _, ties = np.unique(pooled, return_counts=True)
    correction = 1.0 - (ties**3 - ties).sum() / (big_n**3 - big_n)
    if correction <= 0.0:
        return 0.0, 1.0
    centre = (big_n + 1) / 2.0
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + g.size]
        h += g.size * (r.mean() - centre) ** 2
        start += g.size
    h = 12.0 / (big_n * (big_n + 1)) * h / correction
    p = float(sps.chi2.sf(h, len(groups) - 1))
    return float(h), min(1.0, max(0.0, p))


def holm(pvalues) -> np.ndarray:
    """Holm step-down adjusted p-values."""
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted


def pairwise_posthoc(groups, level: float = 0.05, higher_is_better: bool = True) -> list[list[str]]:
    """Two-sided rank-sum tests on every pair with Holm correction.

    Entry [i][j] is "+" when group i is significantly better than group j,
    "-" when significantly worse and "·" otherwise; the diagonal is "·".
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    k = len(groups)
    if k < 2:
        raise ValueError("pairwise_posthoc needs at least two groups")
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    raw, direction = [], []
    for i, j in pairs:
        a, b = groups[i], groups[j]
        if np.unique(np.concatenate([a, b])).size == 1:
            raw.append(1.0)
            direction.append(0)
            continue
        res = sps.mannwhitneyu(a, b, alternative="two-sided", method="auto")
        raw.append(float(res.pvalue))
        # U counts pairs where a beats b
        direction.append(int(np.sign(res.statistic - a.size * b.size / 2.0)))
    adjusted = holm(raw)
    marks = [[NO_DIFFERENCE] * k for _ in range(k)]
    for (i, j), p, d in zip(pairs, adjusted, direction):
        if p < level and d != 0:
            i_better = (d > 0) == higher_is_better
            marks[i][j] = FIRST_BETTER if i_better else SECOND_BETTER
            marks[j][i] = SECOND_BETTER if i_better else FIRST_BETTER
    return marks
