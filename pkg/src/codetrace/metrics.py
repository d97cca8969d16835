"""Rank-quality metrics.

The discounted gain follows the convention where position 1 contributes
its full gain and position i >= 2 is discounted by log2(i):

    DCG@p = rel_1 + sum_{i=2..p} rel_i / log2(i)

nDCG divides by the DCG of the ideal ordering; a query with no relevant
documents has ideal gain zero and is defined to score zero (callers flag
and exclude such queries from averages).
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence


def precision_at_n(ranked: Sequence[str], relevant: Iterable[str], n: int) -> float:
    if n < 1:
        raise ValueError(f"cutoff must be positive, got {n}")
    relevant = set(relevant)
    top = ranked[:n]
    return sum(1 for doc in top if doc in relevant) / n


def recall_at_n(ranked: Sequence[str], relevant: Iterable[str], n: int) -> float:
    if n < 1:
        raise ValueError(f"cutoff must be positive, got {n}")
    relevant = set(relevant)
    if not relevant:
        raise ValueError("recall is undefined for an empty relevant set")
    top = ranked[:n]
    return sum(1 for doc in top if doc in relevant) / len(relevant)


def dcg_at_p(gains: Sequence[float], p: int) -> float:
    total = 0.0
    for i, gain in enumerate(gains[:p], start=1):
        total += gain if i == 1 else gain / math.log2(i)
    return total


def ndcg_at_p(ranked: Sequence[str], relevant: Iterable[str], p: int) -> float:
    if p < 1:
        raise ValueError(f"cutoff must be positive, got {p}")
    relevant = set(relevant)
    gains = [1.0 if doc in relevant else 0.0 for doc in ranked[:p]]
    ideal = [1.0] * min(len(relevant), p)
    ideal_dcg = dcg_at_p(ideal, p)
    if ideal_dcg == 0.0:
        return 0.0
    return dcg_at_p(gains, p) / ideal_dcg
