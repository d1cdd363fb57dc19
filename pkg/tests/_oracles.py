"""Independent oracles used by the tests.

These deliberately avoid the library's own computation paths: extinction
probabilities come from exhaustive dynamic programming over population
sizes and from scalar fixed-point iteration, so they can certify the
generating-function code rather than restate it.
"""

from __future__ import annotations

import math


def binom_pmf(k: int, n: int, p: float) -> float:
    if not 0 <= k <= n:
        return 0.0
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def gwve_extinction_dp(alphabet_size: int, survive_probs: list[float]) -> float:
    """P[B_n = 0] by exact enumeration of the population distribution.

    ``survive_probs[k]`` is the per-cell survival probability at level k
    (k = 0 is the Bernoulli root).  The population after level k is at most
    ``alphabet_size**k``, so the full distribution is tractable for small n.
    """
    p0 = survive_probs[0]
    dist = {0: 1.0 - p0, 1: p0}
    for p in survive_probs[1:]:
        new: dict[int, float] = {}
        for b, mass in dist.items():
            trials = alphabet_size * b
            for k in range(trials + 1):
                new[k] = new.get(k, 0.0) + mass * binom_pmf(k, trials, p)
        dist = new
    return dist.get(0, 0.0)


def constant_rate_extinction_fixed_point(
    alphabet_size: int, line_p: float, root_p: float, iters: int = 10_000
) -> float:
    """Limit extinction probability for constant rates.

    Iterates the per-line fixed point q = (1 - p + p*q)^|S| from 0, then
    mixes with the Bernoulli root: 1 - p0 + p0*q.
    """
    q = 0.0
    for _ in range(iters):
        nxt = (1.0 - line_p + line_p * q) ** alphabet_size
        if abs(nxt - q) < 1e-16:
            q = nxt
            break
        q = nxt
    return 1.0 - root_p + root_p * q


def chi_square_statistic(table: list[list[int]]) -> float:
    """Pearson chi-square statistic for an r x c contingency table."""
    rows = [sum(row) for row in table]
    cols = [sum(col) for col in zip(*table)]
    total = sum(rows)
    stat = 0.0
    for i, row in enumerate(table):
        for j, observed in enumerate(row):
            expected = rows[i] * cols[j] / total
            if expected > 0:
                stat += (observed - expected) ** 2 / expected
    return stat
