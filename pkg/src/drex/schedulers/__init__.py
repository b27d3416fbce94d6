"""Placement schedulers and lookup by name."""

from __future__ import annotations

import re

from drex.errors import InputError
from drex.schedulers.base import Decision, Reason, Rejected, Scheduler, violations
from drex.schedulers.baselines import DAOS_MENU, DaosAdaptive, StaticEC
from drex.schedulers.drex_lb import DrexLB
from drex.schedulers.drex_sc import DrexSC, SaturationCurve, mapping_ranks, pareto_mask, saturation
from drex.schedulers.greedy import GreedyLeastUsed, GreedyMinStorage

_FIXED = {
    "drex-sc": DrexSC,
    "drex-lb": DrexLB,
    "greedy-min-storage": GreedyMinStorage,
    "greedy-least-used": GreedyLeastUsed,
    "daos": DaosAdaptive,
}
_EC = re.compile(r"ec\(\s*(\d+)\s*,\s*(\d+)\s*\)")

SCHEDULER_NAMES = (*_FIXED, "ec(3,2)", "ec(4,2)", "ec(6,3)")


def get_scheduler(name: str) -> Scheduler:
    key = name.strip().lower()
    if key in _FIXED:
        return _FIXED[key]()
    m = _EC.fullmatch(key)
    if m:
        k, p = int(m.group(1)), int(m.group(2))
        if k >= 1 and p >= 1:
            return StaticEC(k, p)
    raise InputError(f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)} or ec(K,P)")


__all__ = [
    "DAOS_MENU",
    "SCHEDULER_NAMES",
    "DaosAdaptive",
    "Decision",
    "DrexLB",
    "DrexSC",
    "GreedyLeastUsed",
    "GreedyMinStorage",
    "Reason",
    "Rejected",
    "SaturationCurve",
    "Scheduler",
    "StaticEC",
    "get_scheduler",
    "mapping_ranks",
    "pareto_mask",
    "saturation",
    "violations",
]
