"""Node failure probabilities and Poisson-binomial availability.

A node with annual failure rate ``afr`` fails as a homogeneous Poisson process
with rate ``-ln(1 - afr)`` per year, so the probability of failing at least
once over one year is exactly ``afr``.

The availability of an item is the probability that at most ``p`` of its
mapped nodes fail, computed with the exact truncated convolution over the
count of failures. The batched variant used by the SC scheduler performs the
same floating point operations in the same order as the scalar one, so a
decision taken from the batch can be re-verified with `availability` and
compare bit-identically.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from drex.errors import InvalidRate

YEAR_DAYS = 365.0


def failure_prob(afr: float, delta_t_days: float) -> float:
    if not 0 <= afr < 1:
        raise InvalidRate(f"annual failure rate {afr} outside [0, 1)")
    if delta_t_days <= 0:
        raise ValueError("delta_t_days must be positive")
    rate = -math.log1p(-afr)
    return -math.expm1(-rate * delta_t_days / YEAR_DAYS)


def daily_failure_prob(afr: float, year_days: float = YEAR_DAYS) -> float:
    """Per-day hazard consistent with `failure_prob`: 1 - (1 - afr)^(1/year_days)."""
    if not 0 <= afr < 1:
        raise InvalidRate(f"annual failure rate {afr} outside [0, 1)")
    return -math.expm1(math.log1p(-afr) / year_days)


def failure_probs(nodes, delta_t_days: float) -> list[float]:
    return [failure_prob(n.afr, delta_t_days) for n in nodes]


def _check_probs(probs: Sequence[float]) -> None:
    if len(probs) == 0:
        raise ValueError("empty failure probability set")
    for q in probs:
        if not 0 <= q < 1:
            raise ValueError(f"failure probability {q} outside [0, 1)")


def availability(probs: Sequence[float], p: int) -> float:
    """Pr(at most p of the independent trials fail)."""
    _check_probs(probs)
    if p < 0:
        raise ValueError("parity count must be non-negative")
    if p >= len(probs):
        return 1.0
    dp = [1.0] + [0.0] * p
    for q in probs:
        r = 1.0 - q
        for i in range(p, 0, -1):
            dp[i] = dp[i] * r + dp[i - 1] * q
        dp[0] *= r
    total = 0.0
    for v in dp:
        total += v
    return total


def _cdf(probs: Sequence[float]) -> list[float]:
    # cdf[p] equals availability(probs, p) bit-for-bit for p < len(probs)
    n = len(probs)
    dp = [1.0] + [0.0] * (n - 1)
    for q in probs:
        r = 1.0 - q
        for i in range(n - 1, 0, -1):
            dp[i] = dp[i] * r + dp[i - 1] * q
        dp[0] *= r
    out, total = [], 0.0
    for v in dp:
        total += v
        out.append(total)
    return out


def min_parity_for_target(probs: Sequence[float], target: float) -> int | None:
    """Smallest p >= 1 meeting the target, or None when even p = N-1 falls short."""
    _check_probs(probs)
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    n = len(probs)
    if n < 2:
        return None
    cdf = _cdf(probs)
    for p in range(1, n):
        if cdf[p] >= target:
            return p
    return None


def best_kp_for_mapping(
    mapping_probs: Sequence[float], item_size: int, target: float
) -> tuple[int, int] | None:
    """(k, p) minimising ceil(size/k) * N over the fixed mapping, or None.

    N is fixed, so the minimum is reached at the largest feasible k, i.e. the
    smallest feasible parity count.
    """
    if len(mapping_probs) < 2:
        raise ValueError("a mapping needs at least two nodes")
    if item_size < 1:
        raise ValueError("item size must be positive")
    p = min_parity_for_target(mapping_probs, target)
    if p is None:
        return None
    return len(mapping_probs) - p, p


def min_parity_batch(probs: np.ndarray, sizes: np.ndarray, target: float, cap: int = 16) -> np.ndarray:
    """Vectorised `min_parity_for_target` over zero-padded rows.

    ``probs`` is (M, W) with zero padding past each row's length ``sizes[m]``;
    padding trials never fail so they leave the distribution unchanged.
    Returns the minimal parity per row, 0 where infeasible.
    """
    probs = np.asarray(probs, dtype=np.float64)
    sizes = np.asarray(sizes, dtype=np.int64)
    m, width = probs.shape
    result = np.zeros(m, dtype=np.int64)
    # longest rows first so column j only touches the rows that reach it;
    # skipping a zero-padded column is exact (x * 1.0 + y * 0.0 == x)
    order = np.argsort(-sizes, kind="stable")
    pending = order
    states = min(max(cap, 1), width - 1) if width > 1 else 1
    while pending.size:
        rows = probs[pending]
        lens = sizes[pending]
        reach = np.searchsorted(-lens, -np.arange(width), side="left")
        dp = np.zeros((pending.size, states + 1))
        dp[:, 0] = 1.0
        for j in range(int(lens.max(initial=0))):
            a = reach[j]
            q = rows[:a, j : j + 1]
            r = 1.0 - q
            head = dp[:a]
            carry = head[:, :-1] * q
            head[:, 1:] *= r
            head[:, 1:] += carry
            head[:, :1] *= r
        cdf = np.cumsum(dp, axis=1)
        ps = np.arange(states + 1)
        ok = (cdf >= target) & (ps >= 1) & (ps[None, :] <= (lens[:, None] - 1))
        found = ok.any(axis=1)
        result[pending[found]] = ok[found].argmax(axis=1)
        # rows whose answer may lie beyond the truncated states need another pass
        unresolved = ~found & (lens - 1 > states)
        pending = pending[unresolved]
        if states >= width - 1:
            break
        states = min(states * 2, width - 1)
    return result


class PrefixAvailability:
    """Availability of a growing prefix of trials, one `add` per node.

    State values match a fresh `availability` call on the same prefix exactly,
    which lets prefix scans (N = 2, 3, ...) cost O(N * states) overall.
    """

    def __init__(self, max_parity: int):
        self.states = max_parity + 1
        self.dp = [1.0] + [0.0] * max_parity
        self.count = 0

    def add(self, q: float) -> None:
        dp = self.dp
        r = 1.0 - q
        for i in range(self.states - 1, 0, -1):
            dp[i] = dp[i] * r + dp[i - 1] * q
        dp[0] *= r
        self.count += 1

    def availability(self, p: int) -> float:
        if p >= self.count:
            return 1.0
        if p >= self.states:
            raise ValueError(f"parity {p} beyond tracked states {self.states - 1}")
        total = 0.0
        for v in self.dp[: p + 1]:
            total += v
        return total

    def min_parity(self, target: float) -> int | None:
        total = self.dp[0]
        for p in range(1, min(self.count, self.states)):
            total += self.dp[p]
            if total >= target:
                return p
        return None
