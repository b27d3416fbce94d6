"""Fixed-configuration erasure coding and a menu-driven adaptive variant."""

from __future__ import annotations

from fractions import Fraction

from drex.model import Placement, ceil_div
from drex.reliability import availability, failure_prob
from drex.schedulers.base import Reason, Rejected, Scheduler, by_write_bw, target_of


def static_window(item, ranked, k: int, p: int, ignore_capacity: bool = False):
    """First window of k+p nodes (bandwidth order, unfit nodes skipped) meeting the target."""
    n = k + p
    chunk = ceil_div(item.size, k)
    eligible = ranked if ignore_capacity else [x for x in ranked if x.free >= chunk]
    target = target_of(item)
    for start in range(len(eligible) - n + 1):
        window = eligible[start : start + n]
        probs = [failure_prob(x.afr, item.retention) for x in window]
        if availability(probs, p) >= target:
            return Placement.for_item(item, k, [x.id for x in window])
    return None


class StaticEC(Scheduler):
    preference = "write_bw"

    def __init__(self, k: int, p: int):
        if k < 1 or p < 1:
            raise ValueError("static EC needs k >= 1 and p >= 1")
        self.k, self.p = k, p
        self.name = f"ec({k},{p})"

    def _place(self, item, state, time_model, ignore_capacity):
        return static_window(item, by_write_bw(state.live_nodes()), self.k, self.p, ignore_capacity)


# (k, p); replication r-fold is k = 1, p = r - 1
DAOS_MENU = ((8, 1), (8, 2), (4, 1), (4, 2), (1, 1), (1, 3), (1, 5))


class DaosAdaptive(Scheduler):
    """Cheapest menu entry (lowest (k+p)/k, then fewest chunks) that fits and meets the target."""

    name = "daos"
    preference = "write_bw"

    def __init__(self, menu=DAOS_MENU):
        self.menu = sorted(menu, key=lambda kp: (Fraction(kp[0] + kp[1], kp[0]), kp[0] + kp[1]))

    def _place(self, item, state, time_model, ignore_capacity):
        ranked = by_write_bw(state.live_nodes())
        for k, p in self.menu:
            placement = static_window(item, ranked, k, p, ignore_capacity)
            if placement is not None:
                return placement
        return None

    def replan(self, item, state, old, time_model=None):
        # the configuration is fixed once chosen; only the nodes may change
        ranked = by_write_bw(state.live_nodes())
        placement = static_window(item, ranked, old.k, old.p)
        return placement if placement is not None else Rejected(Reason.NO_FEASIBLE_MAPPING)
