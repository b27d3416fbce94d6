import pytest
from hypothesis import given
from hypothesis import strategies as st

from drex.errors import CapacityExceeded, DeadNode, UnknownItem
from drex.model import ClusterState, DataItem, Placement, StorageNode, ceil_div
from tests.conftest import make_state


def test_ceil_div():
    assert ceil_div(10, 3) == 4
    assert ceil_div(9, 3) == 3
    assert ceil_div(1, 8) == 1


def test_placement_validation():
    with pytest.raises(ValueError):
        Placement(0, 2, 1, (0, 1), 5)
    with pytest.raises(ValueError):
        Placement(0, 2, 1, (0, 1, 1), 5)
    with pytest.raises(ValueError):
        Placement(0, 2, 0, (0, 1), 5)
    pl = Placement.for_item(DataItem(3, 10), 3, [4, 1, 2, 0])
    assert (pl.k, pl.p, pl.chunk_size, pl.stored_bytes) == (3, 1, 4, 16)


def test_node_validation():
    with pytest.raises(ValueError):
        StorageNode(0, 0, 1, 1, 0.1)
    with pytest.raises(ValueError):
        StorageNode(0, 10, 1, 1, 1.0)
    with pytest.raises(ValueError):
        StorageNode(0, 10, 0, 1, 0.1)


def test_item_validation():
    with pytest.raises(ValueError):
        DataItem(0, 0)
    with pytest.raises(ValueError):
        DataItem(0, 5, reliability_target=1.0)


def test_dense_ids_required():
    s = make_state([0.1, 0.1])
    with pytest.raises(ValueError):
        ClusterState([s.nodes[1]])


def test_apply_and_remove_restore_state():
    s = make_state([0.01] * 4, capacity=1000)
    pl = Placement(7, 2, 1, (0, 2, 3), 100)
    s.apply_placement(pl)
    assert [n.free for n in s.nodes] == [900, 1000, 900, 900]
    s.check_invariants()
    s.remove_placement(7)
    assert [n.free for n in s.nodes] == [1000] * 4
    with pytest.raises(UnknownItem):
        s.remove_placement(7)


def test_apply_is_all_or_nothing():
    s = make_state([0.01] * 3, capacity=1000, free=[1000, 50, 1000])
    with pytest.raises(CapacityExceeded):
        s.apply_placement(Placement(1, 2, 1, (0, 1, 2), 100))
    assert [n.free for n in s.nodes] == [1000, 50, 1000]
    s.kill(2)
    with pytest.raises(DeadNode):
        s.apply_placement(Placement(1, 1, 1, (0, 2), 10))


def test_replace_chunk_moves_space():
    s = make_state([0.01] * 4, capacity=1000)
    s.apply_placement(Placement(1, 2, 1, (0, 1, 2), 100))
    s.kill(1)
    moved = s.replace_chunk(1, 1, 3)
    assert moved.nodes == (0, 3, 2)
    assert s.nodes[3].free == 900
    s.check_invariants()


def test_snapshot_is_independent():
    s = make_state([0.01] * 3, capacity=1000)
    snap = s.snapshot()
    s.apply_placement(Placement(1, 1, 1, (0, 1), 10))
    assert snap.nodes[0].free == 1000 and not snap.placements


@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 3), st.integers(1, 200)), max_size=30), st.data())
def test_random_apply_remove_keeps_invariants(ops, data):
    s = make_state([0.01] * 8, capacity=2000)
    for i, (k, p, size) in enumerate(ops):
        nodes = data.draw(st.permutations(range(8)))[: k + p]
        pl = Placement(i, k, p, nodes, ceil_div(size, k))
        try:
            s.apply_placement(pl)
        except CapacityExceeded:
            pass
        if s.placements and data.draw(st.booleans()):
            s.remove_placement(data.draw(st.sampled_from(sorted(s.placements))))
        s.check_invariants()
