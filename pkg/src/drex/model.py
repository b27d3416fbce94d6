"""Domain types and cluster bookkeeping."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from drex.errors import CapacityExceeded, DeadNode, UnknownItem

MB = 1_000_000
TB = 1_000_000_000_000
DEFAULT_SMALLEST_ITEM = 1 * MB


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class StorageNode:
    id: int
    capacity: int
    write_bw: float
    read_bw: float
    afr: float
    free: int = -1
    alive: bool = True
    name: str = ""

    def __post_init__(self):
        if self.free == -1:
            self.free = self.capacity
        if self.capacity <= 0:
            raise ValueError(f"node {self.id}: capacity must be positive")
        if not 0 <= self.free <= self.capacity:
            raise ValueError(f"node {self.id}: free space outside [0, capacity]")
        if self.write_bw <= 0 or self.read_bw <= 0:
            raise ValueError(f"node {self.id}: bandwidths must be positive")
        if not 0 <= self.afr < 1:
            raise ValueError(f"node {self.id}: afr must lie in [0, 1)")

    @property
    def used(self) -> int:
        return self.capacity - self.free


@dataclass(frozen=True)
class DataItem:
    id: int
    size: int
    submit_time: float = 0.0
    retention: float = 365.0
    reliability_target: float | None = 0.9

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"item {self.id}: size must be at least 1 byte")
        if self.retention <= 0:
            raise ValueError(f"item {self.id}: retention must be positive")
        if self.reliability_target is not None and not 0 < self.reliability_target < 1:
            raise ValueError(f"item {self.id}: reliability target must lie in (0, 1)")


@dataclass(frozen=True)
class Placement:
    """Chosen (k, p) and the ordered node mapping for one item."""

    item_id: int
    k: int
    p: int
    nodes: tuple[int, ...]
    chunk_size: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        if self.k < 1 or self.p < 1:
            raise ValueError("placements need k >= 1 and p >= 1")
        if len(self.nodes) != self.k + self.p:
            raise ValueError("mapping length must equal k + p")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("mapping contains duplicate nodes")

    @classmethod
    def for_item(cls, item: DataItem, k: int, nodes) -> Placement:
        nodes = tuple(nodes)
        return cls(item.id, k, len(nodes) - k, nodes, ceil_div(item.size, k))

    @property
    def n(self) -> int:
        return self.k + self.p

    @property
    def stored_bytes(self) -> int:
        return self.chunk_size * self.n


@dataclass
class ClusterState:
    """Mutable free-space and liveness view threaded through a simulation.

    Single-writer: one simulation owns one state. Use `snapshot()` to hand a
    read-only copy to concurrent evaluations.
    """

    nodes: list[StorageNode]
    placements: dict[int, Placement] = field(default_factory=dict)
    clock: float = 0.0
    smallest_item: int | None = None

    def __post_init__(self):
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError("node ids must be dense 0..L-1 in catalog order")

    @classmethod
    def from_nodes(cls, nodes) -> ClusterState:
        return cls([copy.copy(n) for n in nodes])

    def snapshot(self) -> ClusterState:
        return copy.deepcopy(self)

    def live_nodes(self) -> list[StorageNode]:
        return [n for n in self.nodes if n.alive]

    def observe_item(self, size: int) -> None:
        if self.smallest_item is None or size < self.smallest_item:
            self.smallest_item = size

    def smallest_known(self, size: int | None = None) -> int:
        known = [s for s in (self.smallest_item, size) if s is not None]
        return min(known) if known else DEFAULT_SMALLEST_ITEM

    def apply_placement(self, placement: Placement) -> ClusterState:
        for nid in placement.nodes:
            node = self.nodes[nid]
            if not node.alive:
                raise DeadNode(nid)
            if node.free < placement.chunk_size:
                raise CapacityExceeded(nid, placement.chunk_size, node.free)
        for nid in placement.nodes:
            self.nodes[nid].free -= placement.chunk_size
        self.placements[placement.item_id] = placement
        return self

    def remove_placement(self, item_id: int) -> ClusterState:
        placement = self.placements.pop(item_id, None)
        if placement is None:
            raise UnknownItem(item_id)
        for nid in placement.nodes:
            node = self.nodes[nid]
            if node.alive:
                node.free += placement.chunk_size
        return self

    def replace_chunk(self, item_id: int, old_node: int, new_node: int) -> Placement:
        """Move one chunk slot of a stored item from `old_node` to `new_node`."""
        placement = self.placements[item_id]
        target = self.nodes[new_node]
        if not target.alive:
            raise DeadNode(new_node)
        if target.free < placement.chunk_size:
            raise CapacityExceeded(new_node, placement.chunk_size, target.free)
        nodes = tuple(new_node if n == old_node else n for n in placement.nodes)
        updated = Placement(item_id, placement.k, placement.p, nodes, placement.chunk_size)
        target.free -= placement.chunk_size
        if self.nodes[old_node].alive:
            self.nodes[old_node].free += placement.chunk_size
        self.placements[item_id] = updated
        return updated

    def kill(self, node_id: int) -> None:
        self.nodes[node_id].alive = False

    def placed_bytes(self, node_id: int) -> int:
        return sum(p.chunk_size for p in self.placements.values() if node_id in p.nodes)

    def items_on(self, node_id: int) -> list[int]:
        return sorted(i for i, p in self.placements.items() if node_id in p.nodes)

    def check_invariants(self) -> None:
        """Raise AssertionError if bookkeeping drifted from the recorded placements."""
        placed = [0] * len(self.nodes)
        for item_id, p in self.placements.items():
            assert len(set(p.nodes)) == len(p.nodes), f"item {item_id} maps a node twice"
            for nid in p.nodes:
                assert 0 <= nid < len(self.nodes), f"item {item_id} references unknown node {nid}"
                placed[nid] += p.chunk_size
        for node in self.nodes:
            assert 0 <= node.free <= node.capacity, f"node {node.id} free out of range"
            if node.alive:
                assert node.free == node.capacity - placed[node.id], (
                    f"node {node.id}: free={node.free} but placed={placed[node.id]}"
                )


def apply_placement(state: ClusterState, placement: Placement) -> ClusterState:
    return state.apply_placement(placement)


def remove_placement(state: ClusterState, item_id: int) -> ClusterState:
    return state.remove_placement(item_id)
