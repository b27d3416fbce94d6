from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from drex.model import ClusterState, DataItem, Placement, StorageNode
from drex.perfmodel import TimeModel
from drex.reliability import availability, failure_prob


class Reason(str, Enum):
    NO_FEASIBLE_MAPPING = "NoFeasibleMapping"
    CAPACITY_EXHAUSTED = "CapacityExhausted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Rejected:
    reason: Reason


Decision = Placement | Rejected


def by_write_bw(nodes: list[StorageNode]) -> list[StorageNode]:
    return sorted(nodes, key=lambda n: (-n.write_bw, n.id))


def by_free_space(nodes: list[StorageNode]) -> list[StorageNode]:
    return sorted(nodes, key=lambda n: (-n.free, n.id))


def target_of(item: DataItem) -> float:
    if item.reliability_target is None:
        raise ValueError(f"item {item.id} has no reliability target assigned")
    return item.reliability_target


class Scheduler:
    """Common interface: decide (k, p) and a node mapping for one item.

    Subclasses implement `_place`, returning a Placement or None. With
    ``ignore_capacity`` set they must answer as if every node had unlimited
    free space; `schedule` uses that second pass to tell a capacity shortage
    apart from an unreachable reliability target.
    """

    name = "abstract"
    # recovery tries replacement nodes in this order: "write_bw" or "free"
    preference = "free"

    def schedule(self, item: DataItem, state: ClusterState, time_model: TimeModel | None = None) -> Decision:
        target_of(item)
        placement = self._place(item, state, time_model, ignore_capacity=False)
        if placement is not None:
            return placement
        relaxed = self._place(item, state, time_model, ignore_capacity=True)
        return Rejected(Reason.CAPACITY_EXHAUSTED if relaxed is not None else Reason.NO_FEASIBLE_MAPPING)

    def _place(self, item, state, time_model, ignore_capacity: bool) -> Placement | None:
        raise NotImplementedError

    def replan(self, item: DataItem, state: ClusterState, old: Placement, time_model: TimeModel | None = None) -> Decision:
        """Fresh decision for a stored item whose chunk could not simply be replaced."""
        return self.schedule(item, state, time_model)

    def preference_order(self, state: ClusterState) -> list[StorageNode]:
        live = state.live_nodes()
        return by_write_bw(live) if self.preference == "write_bw" else by_free_space(live)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def violations(item: DataItem, state: ClusterState, placement: Placement) -> list[str]:
    """Independent post-hoc check of a decision against the target and free space."""
    problems = []
    nodes = [state.nodes[i] for i in placement.nodes]
    if placement.chunk_size != -(-item.size // placement.k):
        problems.append("chunk size is not ceil(size / k)")
    for n in nodes:
        if not n.alive:
            problems.append(f"node {n.id} is dead")
        if n.free < placement.chunk_size:
            problems.append(f"node {n.id} lacks space")
    probs = [failure_prob(n.afr, item.retention) for n in nodes]
    if availability(probs, placement.p) < target_of(item):
        problems.append("reliability target not met")
    return problems
