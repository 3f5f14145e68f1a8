"""Nonparametric comparison statistics: two-sided Wilcoxon rank-sum with
midrank ties (exact enumeration for small samples, normal approximation with
continuity and tie correction otherwise) and Friedman mean ranks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ERROR_FLOOR = 1e-8

BETTER, WORSE, APPROX = "better", "worse", "approx"


def floor_errors(values, threshold: float = ERROR_FLOOR) -> np.ndarray:
    """CEC reporting convention: errors below the floor count as solved (0)."""
    values = np.asarray(values, dtype=float)
    return np.where(values < threshold, 0.0, values)


def rankdata(values) -> np.ndarray:
    """Midrank ranking (ties share the average of their positions)."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass
class WilcoxonResult:
    outcome: str        # better | worse | approx, from the first sample's view
    p_value: float
    statistic: float    # rank sum of the first sample
    exact: bool


def wilcoxon_rank_sum(a, b, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided rank-sum test classifying a against b (minimisation: smaller
    medians are better). Exact when both samples have at most 10 values."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 < 3 or n2 < 3:
        raise ValueError("wilcoxon_rank_sum needs at least 3 values per sample")

    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    w = float(ranks[:n1].sum())

    if np.all(pooled == pooled[0]):
        return WilcoxonResult(APPROX, 1.0, w, False)

    exact = max(n1, n2) <= 10
    if exact:
        p = _exact_two_sided_p(ranks, n1, w)
    else:
        p = _normal_two_sided_p(ranks, n1, n2, w)

    if p < alpha:
        med_a, med_b = float(np.median(a)), float(np.median(b))
        if med_a < med_b:
            return WilcoxonResult(BETTER, p, w, exact)
        if med_a > med_b:
            return WilcoxonResult(WORSE, p, w, exact)
    return WilcoxonResult(APPROX, p, w, exact)


def _exact_two_sided_p(ranks: np.ndarray, n1: int, w: float) -> float:
    """Exact conditional null distribution of the rank sum, enumerated by a
    subset-sum count over doubled ranks (midranks are half-integers)."""
    r2 = np.rint(2.0 * ranks).astype(int)
    n = len(r2)
    max_s = int(r2.sum())
    # dp[k][s] = number of k-element subsets of the doubled ranks summing to s
    dp = [[0] * (max_s + 1) for _ in range(n1 + 1)]
    dp[0][0] = 1
    for val in r2:
        val = int(val)
        for k in range(min(n1, n), 0, -1):
            row, prev = dp[k], dp[k - 1]
            for s in range(max_s, val - 1, -1):
                c = prev[s - val]
                if c:
                    row[s] += c
    dist = dp[n1]
    w2 = int(round(2.0 * w))
    count_le = sum(dist[: w2 + 1])
    count_ge = sum(dist[w2:])
    total = math.comb(n, n1)
    return min(1.0, 2.0 * min(count_le, count_ge) / total)


def _normal_two_sided_p(ranks: np.ndarray, n1: int, n2: int, w: float) -> float:
    n = n1 + n2
    mean = n1 * (n + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    diff = w - mean
    # continuity correction toward the mean
    diff = math.copysign(max(0.0, abs(diff) - 0.5), diff)
    z = diff / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def friedman_mean_ranks(errors_by_function: dict, variants: list[str],
                        floor: bool = True) -> dict[str, float]:
    """Mean rank per variant across functions; lower is better.

    errors_by_function maps a function id to {variant: error vector over runs};
    each function's variants are ranked by mean error (midranks on ties).
    """
    if len(variants) < 2:
        raise ValueError("friedman ranking needs at least 2 variants")
    if len(errors_by_function) < 2:
        raise ValueError("friedman ranking needs at least 2 functions")
    totals = {v: 0.0 for v in variants}
    for fid, per_variant in errors_by_function.items():
        aggregated = []
        for v in variants:
            vals = np.asarray(per_variant[v], dtype=float)
            if floor:
                vals = floor_errors(vals)
            aggregated.append(float(np.mean(vals)))
        ranks = rankdata(aggregated)
        for v, r in zip(variants, ranks):
            totals[v] += r
    n_funcs = len(errors_by_function)
    return {v: totals[v] / n_funcs for v in variants}
