"""Greedy baselines: minimum storage overhead and most-free-space-first."""

from __future__ import annotations

from drex.model import Placement, ceil_div
from drex.reliability import PrefixAvailability, failure_prob
from drex.schedulers.base import Scheduler, by_free_space, by_write_bw, target_of


class GreedyMinStorage(Scheduler):
    """Minimise ceil(size/k) * N over prefixes of the write-bandwidth ranking.

    The ranking is taken over live nodes with room for the candidate chunk, so
    a full fast node drops out instead of blocking every prefix. Ties go to
    the larger k, then the smaller N.
    """

    name = "greedy-min-storage"
    preference = "write_bw"

    def _place(self, item, state, time_model, ignore_capacity):
        target = target_of(item)
        live = by_write_bw(state.live_nodes())
        probs = {n.id: failure_prob(n.afr, item.retention) for n in live}
        best_key, best = None, None
        for k in range(1, len(live)):
            chunk = ceil_div(item.size, k)
            if best_key is not None and chunk * (k + 1) > best_key[0]:
                continue
            eligible = live if ignore_capacity else [n for n in live if n.free >= chunk]
            if len(eligible) < k + 1:
                continue
            acc = PrefixAvailability(len(eligible) - k)
            for n in eligible[:k]:
                acc.add(probs[n.id])
            for size in range(k + 1, len(eligible) + 1):
                stored = chunk * size
                if best_key is not None and stored > best_key[0]:
                    break
                acc.add(probs[eligible[size - 1].id])
                if acc.availability(size - k) >= target:
                    key = (stored, -k, size)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = Placement.for_item(item, k, [n.id for n in eligible[:size]])
                    break
        return best


class GreedyLeastUsed(Scheduler):
    """Smallest k + p on the nodes with the most free space."""

    name = "greedy-least-used"
    preference = "free"

    def _place(self, item, state, time_model, ignore_capacity):
        target = target_of(item)
        live = by_free_space(state.live_nodes())
        acc = PrefixAvailability(max(len(live) - 1, 0))
        for size, node in enumerate(live, start=1):
            acc.add(failure_prob(node.afr, item.retention))
            if size < 2:
                continue
            p = acc.min_parity(target)
            if p is None:
                continue
            k = size - p
            chunk = ceil_div(item.size, k)
            # the prefix is sorted by free space, so its last node is the tightest
            if ignore_capacity or live[size - 1].free >= chunk:
                return Placement.for_item(item, k, [n.id for n in live[:size]])
        return None
