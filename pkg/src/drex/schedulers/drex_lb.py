"""Load-balancing scheduler driven by a balance penalty on post-placement free space."""

from __future__ import annotations

import numpy as np

from drex.model import Placement, ceil_div
from drex.reliability import PrefixAvailability, failure_prob
from drex.schedulers.base import Scheduler, by_free_space, target_of


class DrexLB(Scheduler):
    """Scan p = 1, 2, ... and k = 2 .. L-p over prefixes of the free-space ranking.

    For every (k, p) whose prefix meets the target and fits, the balance
    penalty is the summed distance of each node's free space from the cluster
    mean after the write (mapped nodes lose one chunk). The first p with any
    acceptable k ends the scan; among its k values the smallest penalty wins,
    earlier (smaller) k on ties.
    """

    name = "drex-lb"
    preference = "free"

    def _place(self, item, state, time_model, ignore_capacity):
        target = target_of(item)
        ranked = by_free_space(state.live_nodes())
        count = len(ranked)
        if count < 3:
            return None
        # penalties scaled by L stay integral, so ties compare exactly
        free = np.array([n.free for n in ranked], dtype=np.int64)
        total = int(free.sum())
        dev = np.abs(count * free - total)
        # tail[i] = sum of |L*F - sum F| over ranks >= i
        tail = np.concatenate([np.cumsum(dev[::-1])[::-1], [0]])
        probs = [failure_prob(n.afr, item.retention) for n in ranked]
        for p in range(1, count - 1):
            acc = PrefixAvailability(p)
            for q in probs[: p + 1]:
                acc.add(q)
            best_bp, best_k = None, -1
            for k in range(2, count - p + 1):
                size = k + p
                acc.add(probs[size - 1])
                if acc.availability(p) < target:
                    continue
                chunk = ceil_div(item.size, k)
                if not ignore_capacity and ranked[size - 1].free < chunk:
                    continue
                bp = int(np.abs(count * (free[:size] - chunk) - total).sum()) + int(tail[size])
                if best_bp is None or bp < best_bp:
                    best_bp, best_k = bp, k
            if best_k != -1:
                return Placement.for_item(item, best_k, [n.id for n in ranked[: best_k + p]])
        return None
