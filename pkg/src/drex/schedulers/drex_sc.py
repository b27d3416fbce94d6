"""Pareto-front scheduler trading duration, storage and saturation."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from drex.model import DEFAULT_SMALLEST_ITEM, Placement
from drex.perfmodel import default_model
from drex.reliability import failure_prob, min_parity_batch
from drex.schedulers.base import Scheduler, by_free_space, target_of

MAX_MAPPINGS = 1 << 10


@dataclass(frozen=True)
class SaturationCurve:
    """Normalised exponential from zero use up to ``capacity - s_min``."""

    s_min: float = DEFAULT_SMALLEST_ITEM
    steepness: float = 8.0

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("steepness must be positive")
        if self.s_min < 0:
            raise ValueError("s_min must be non-negative")

    def __call__(self, used, capacity):
        used = np.asarray(used, dtype=np.float64)
        capacity = np.asarray(capacity, dtype=np.float64)
        x = np.clip(used / np.maximum(capacity - self.s_min, 1.0), 0.0, 1.0)
        return np.expm1(self.steepness * x) / math.expm1(self.steepness)


def saturation(curve: SaturationCurve, used: float, capacity: float) -> float:
    if used < 0 or used > capacity:
        raise ValueError("need 0 <= used <= capacity")
    return float(curve(used, capacity))


@functools.lru_cache(maxsize=256)
def mapping_ranks(count: int, limit: int = MAX_MAPPINGS) -> tuple[tuple[int, ...], ...]:
    """Candidate mappings as tuples of free-space ranks, in evaluation order.

    Contiguous windows come first (by start, then length), followed by the
    remaining subsets of size >= 2 in lexicographic order.
    """
    out: list[tuple[int, ...]] = []
    for start in range(count - 1):
        for stop in range(start + 2, count + 1):
            out.append(tuple(range(start, stop)))
            if len(out) >= limit:
                return tuple(out)

    def walk(prefix: list[int]):
        # preorder DFS over increasing index tuples is lexicographic order
        for nxt in range(prefix[-1] + 1, count):
            prefix.append(nxt)
            yield tuple(prefix)
            yield from walk(prefix)
            prefix.pop()

    for first in range(count - 1):
        for combo in walk([first]):
            if combo[-1] - combo[0] + 1 == len(combo):
                continue
            out.append(combo)
            if len(out) >= limit:
                return tuple(out)
    return tuple(out)


@functools.lru_cache(maxsize=256)
def _rank_matrix(count: int, limit: int) -> tuple[np.ndarray, np.ndarray]:
    maps = mapping_ranks(count, limit)
    width = max(len(m) for m in maps)
    idx = np.full((len(maps), width), count, dtype=np.int64)
    for row, m in enumerate(maps):
        idx[row, : len(m)] = m
    sizes = np.array([len(m) for m in maps], dtype=np.int64)
    idx.setflags(write=False)
    sizes.setflags(write=False)
    return idx, sizes


def pareto_mask(objectives: np.ndarray) -> np.ndarray:
    """True for rows not dominated (all <=, one <) by any other row.

    Rows are visited in lexicographic order. The first row not yet eliminated
    is on the front: anything that could dominate it sorts earlier and is
    either on the front or dominated by a front row, which would then
    dominate it too. Each front row eliminates everything it dominates.
    """
    obj = np.asarray(objectives, dtype=np.float64)
    mask = np.zeros(len(obj), dtype=bool)
    order = np.lexsort(obj.T[::-1])
    rows = obj[order]
    alive = np.ones(len(obj), dtype=bool)
    for i in range(len(rows)):
        if not alive[i]:
            continue
        mask[order[i]] = True
        rest = rows[i + 1 :]
        worse = (rest >= rows[i]).all(axis=1) & (rest != rows[i]).any(axis=1)
        alive[i + 1 :] &= ~worse
    return mask


def _progress(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.ones_like(values)
    return 1.0 - (values - lo) / (hi - lo)


class DrexSC(Scheduler):
    """Score candidate mappings on the Pareto front of (duration, storage, saturation)."""

    name = "drex-sc"
    preference = "free"

    def __init__(self, steepness: float = 8.0, max_mappings: int = MAX_MAPPINGS):
        self.steepness = steepness
        self.max_mappings = max_mappings

    def candidates(self, item, state, time_model=None, ignore_capacity=False):
        """Every feasible candidate with its objectives, in enumeration order.

        Returns (ranked nodes, rank matrix (M, W) padded with len(ranked),
        sizes, k, p, chunk, objectives (M, 3)).
        """
        target = target_of(item)
        ranked = by_free_space(state.live_nodes())
        count = len(ranked)
        if count < 2:
            none = np.empty(0, dtype=np.int64)
            return ranked, np.empty((0, 0), dtype=np.int64), none, none, none, none, np.empty((0, 3))
        model = time_model if time_model is not None else default_model()
        curve = SaturationCurve(state.smallest_known(item.size), self.steepness)
        idx, sizes = _rank_matrix(count, self.max_mappings)

        # one sentinel column: never fails, never limits bandwidth or space
        probs = np.array([failure_prob(n.afr, item.retention) for n in ranked] + [0.0])
        free = np.array([n.free for n in ranked] + [np.inf], dtype=np.float64)
        wbw = np.array([n.write_bw for n in ranked] + [np.inf], dtype=np.float64)
        rbw = np.array([n.read_bw for n in ranked] + [np.inf], dtype=np.float64)
        used = np.array([n.used for n in ranked] + [0], dtype=np.float64)
        cap = np.array([n.capacity for n in ranked] + [1], dtype=np.float64)

        p = min_parity_batch(probs[idx], sizes, target)
        ok = p > 0
        k = np.where(ok, sizes - p, 1)
        chunk = -(-item.size // k)
        if not ignore_capacity:
            ok &= free[idx].min(axis=1) >= chunk
        rows = np.flatnonzero(ok)
        idx, sizes, k, p, chunk = idx[rows], sizes[rows], k[rows], p[rows], chunk[rows]

        cf = chunk.astype(np.float64)
        duration = (
            cf / wbw[idx].min(axis=1)
            + cf / rbw[idx].min(axis=1)
            + model.encode_array(item.size, sizes, k)
            + model.decode_array(item.size, k)
        )
        storage = cf * sizes
        real = idx < count
        sat = np.where(real, curve(used[idx] + cf[:, None], cap[idx]), 0.0).sum(axis=1)
        objectives = np.column_stack([duration, storage, sat])
        return ranked, idx, sizes, k, p, chunk, objectives

    def _place(self, item, state, time_model, ignore_capacity):
        ranked, idx, sizes, k, _, _, obj = self.candidates(item, state, time_model, ignore_capacity)
        if not len(idx):
            return None
        best = 0
        if not ignore_capacity:
            front = np.flatnonzero(pareto_mask(obj))
            f = obj[front]
            live = state.live_nodes()
            curve = SaturationCurve(state.smallest_known(item.size), self.steepness)
            sys_sat = float(curve(sum(n.used for n in live), sum(n.capacity for n in live)))
            score = (1.0 - sys_sat) * _progress(f[:, 0]) + (_progress(f[:, 1]) + _progress(f[:, 2])) / 2
            best = int(front[int(np.argmax(score))])
        # on the relaxed pass only existence matters, so the first candidate will do
        nodes = [ranked[r].id for r in idx[best, : sizes[best]]]
        return Placement.for_item(item, int(k[best]), nodes)
