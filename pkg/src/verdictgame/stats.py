"""Two-arm significance tests on win counts."""

from __future__ import annotations

import math
from math import comb

FISHER = "fisher_exact"
Z_TEST = "two_proportion_z"


def _check(wins: int, n: int) -> None:
    if n < 1:
        raise ValueError("arm has no matches")
    if not 0 <= wins <= n:
        raise ValueError(f"wins {wins} outside [0, {n}]")


def fisher_exact(a_wins: int, a_n: int, b_wins: int, b_n: int) -> float:
    """Two-sided Fisher exact p-value for the 2x2 table of wins/non-wins.

    Sums the hypergeometric probabilities of every table with the observed
    margins that is no more likely than the observed one. Probabilities are
    compared as exact integers, so ties are never lost to rounding.
    """
    _check(a_wins, a_n)
    _check(b_wins, b_n)
    total, col = a_n + b_n, a_wins + b_wins
    lo, hi = max(0, col - b_n), min(col, a_n)
    weights = [comb(col, i) * comb(total - col, a_n - i) for i in range(lo, hi + 1)]
    observed = weights[a_wins - lo]
    tail = sum(w for w in weights if w <= observed)
    return min(1.0, tail / comb(total, a_n))


def two_proportion_z(a_wins: int, a_n: int, b_wins: int, b_n: int) -> float:
    """Two-sided pooled z-test p-value."""
    _check(a_wins, a_n)
    _check(b_wins, b_n)
    pooled = (a_wins + b_wins) / (a_n + b_n)
    if pooled in (0.0, 1.0):
        return 1.0
    se = math.sqrt(pooled * (1 - pooled) * (1 / a_n + 1 / b_n))
    z = (a_wins / a_n - b_wins / b_n) / se
    return math.erfc(abs(z) / math.sqrt(2))


TESTS = {FISHER: fisher_exact, Z_TEST: two_proportion_z}


def p_value(a_wins: int, a_n: int, b_wins: int, b_n: int, test: str = FISHER) -> float:
    if test not in TESTS:
        raise ValueError(f"unknown test {test!r}")
    return TESTS[test](a_wins, a_n, b_wins, b_n)
