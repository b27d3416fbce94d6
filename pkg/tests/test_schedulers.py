import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drex.errors import InputError
from drex.model import MB, TB, ClusterState, DataItem, Placement, ceil_div
from drex.perfmodel import TimeModel
from drex.reliability import availability, failure_prob
from drex.schedulers import (
    SCHEDULER_NAMES,
    DaosAdaptive,
    DrexLB,
    DrexSC,
    GreedyLeastUsed,
    GreedyMinStorage,
    Reason,
    Rejected,
    StaticEC,
    get_scheduler,
)
from drex.schedulers.base import by_free_space, by_write_bw, violations
from drex.schedulers.drex_sc import SaturationCurve, mapping_ranks, pareto_mask, saturation
from tests.conftest import item, make_nodes, make_state


def probs_of(nodes, retention=365.0):
    return [failure_prob(n.afr, retention) for n in nodes]


# ---- oracles --------------------------------------------------------------


def gms_oracle(it, state):
    live = by_write_bw(state.live_nodes())
    best = None
    for k in range(1, len(live)):
        chunk = ceil_div(it.size, k)
        elig = [n for n in live if n.free >= chunk]
        for size in range(k + 1, len(elig) + 1):
            if availability(probs_of(elig[:size], it.retention), size - k) >= it.reliability_target:
                key = (chunk * size, -k, size)
                if best is None or key < best[0]:
                    best = (key, k, [n.id for n in elig[:size]])
                break
    return None if best is None else (best[1], best[2])


def lb_oracle(it, state):
    ranked = by_free_space(state.live_nodes())
    free = [n.free for n in ranked]
    mean = Fraction(sum(free), len(free))
    for p in range(1, len(ranked) - 1):
        best = None
        for k in range(2, len(ranked) - p + 1):
            n = k + p
            if availability(probs_of(ranked[:n], it.retention), p) < it.reliability_target:
                continue
            chunk = ceil_div(it.size, k)
            if ranked[n - 1].free < chunk:
                continue
            after = [f - chunk if i < n else f for i, f in enumerate(free)]
            bp = sum(abs(f - mean) for f in after)
            if best is None or bp < best[0]:
                best = (bp, k)
        if best is not None:
            return best[1], p
    return None


def brute_pareto(obj):
    out = []
    for i, a in enumerate(obj):
        out.append(not any((b <= a).all() and (b < a).any() for j, b in enumerate(obj) if j != i))
    return np.array(out)


# ---- registry -------------------------------------------------------------


def test_registry_names():
    for name in SCHEDULER_NAMES:
        assert get_scheduler(name).name == name
    assert get_scheduler("ec( 5 , 3 )").name == "ec(5,3)"
    with pytest.raises(InputError):
        get_scheduler("ec(0,2)")
    with pytest.raises(InputError):
        get_scheduler("nope")


def test_missing_target_raises():
    with pytest.raises(ValueError):
        GreedyMinStorage().schedule(DataItem(0, 10, reliability_target=None), make_state([0.01] * 4))


# ---- greedy ---------------------------------------------------------------


def test_gms_reliable_nodes_uses_all_but_one_as_data():
    s = make_state([0.01] * 5)
    pl = GreedyMinStorage().schedule(item(rt=0.9), s)
    assert (pl.k, pl.p) == (4, 1)


def test_gms_skips_full_fast_node():
    s = make_state([0.01] * 5, capacity=TB, free=[10, TB, TB, TB, TB])
    pl = GreedyMinStorage().schedule(item(rt=0.9), s)
    assert 0 not in pl.nodes and pl.k == 3


def test_glu_prefers_free_space():
    s = make_state([0.01] * 6, capacity=TB, free=[TB // 4, TB, TB // 2, TB, TB, TB // 3])
    pl = GreedyLeastUsed().schedule(item(rt=0.9), s)
    assert set(pl.nodes) == {1, 3}
    assert (pl.k, pl.p) == (1, 1)


# ---- LB -------------------------------------------------------------------


def test_lb_example():
    s = make_state([0.01] * 3, capacity=9, free=[9, 9, 9])
    pl = DrexLB().schedule(item(size=6, rt=0.9), s)
    assert (pl.k, pl.p) == (2, 1)


def test_lb_needs_three_nodes():
    assert isinstance(DrexLB().schedule(item(), make_state([0.01] * 2)), Rejected)


# ---- SC -------------------------------------------------------------------


def test_saturation_curve_points():
    c = SaturationCurve(s_min=0, steepness=8)
    assert saturation(c, 0, 100) == 0.0
    assert saturation(c, 100, 100) == pytest.approx(1.0)
    assert saturation(c, 50, 100) == pytest.approx(math.expm1(4) / math.expm1(8), rel=1e-12)
    assert saturation(c, 50, 100) == pytest.approx(0.01799, abs=1e-5)
    with pytest.raises(ValueError):
        saturation(c, 101, 100)


@given(st.floats(0, 1), st.floats(0, 1))
def test_saturation_monotone(a, b):
    c = SaturationCurve(s_min=1, steepness=8)
    lo, hi = sorted((a, b))
    assert saturation(c, lo * 1000, 1000) <= saturation(c, hi * 1000, 1000)


@pytest.mark.parametrize("count", range(2, 12))
def test_mapping_enumeration(count):
    maps = mapping_ranks(count)
    expected = min(2**count - count - 1, 1024)
    assert len(maps) == expected == len(set(maps))
    assert all(len(m) >= 2 and list(m) == sorted(set(m)) for m in maps)
    windows = count * (count - 1) // 2
    assert all(m[-1] - m[0] + 1 == len(m) for m in maps[:windows])
    assert maps[windows:] == tuple(sorted(maps[windows:]))


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=40))
def test_pareto_matches_brute_force(rows):
    obj = np.array(rows, dtype=float)
    assert (pareto_mask(obj) == brute_pareto(obj)).all()


def test_sc_choice_lies_on_front():
    s = make_state([0.02, 0.05, 0.01, 0.1, 0.03, 0.02, 0.04], capacity=TB,
                   free=[TB, TB // 2, TB // 3, TB, TB // 5, TB // 2, TB])
    sc = DrexSC()
    it = item(size=300 * MB, rt=0.99)
    ranked, idx, sizes, k, p, chunk, obj = sc.candidates(it, s)
    pl = sc.schedule(it, s)
    front = pareto_mask(obj)
    chosen = [i for i in range(len(idx)) if tuple(ranked[r].id for r in idx[i, : sizes[i]]) == pl.nodes]
    assert len(chosen) == 1 and front[chosen[0]]
    assert violations(it, s, pl) == []


def test_sc_candidates_carry_minimal_parity():
    s = make_state([0.02, 0.3, 0.01, 0.1, 0.03])
    it = item(rt=0.999)
    ranked, idx, sizes, k, p, chunk, obj = DrexSC().candidates(it, s, TimeModel.zero())
    for row in range(len(idx)):
        probs = [failure_prob(ranked[r].afr, it.retention) for r in idx[row, : sizes[row]]]
        assert availability(probs, p[row]) >= it.reliability_target
        assert p[row] == 1 or availability(probs, p[row] - 1) < it.reliability_target


# ---- baselines -----------------------------------------------------------


def test_static_ec_needs_enough_nodes():
    d = StaticEC(3, 2).schedule(item(), make_state([0.01] * 4))
    assert d == Rejected(Reason.NO_FEASIBLE_MAPPING)


def test_static_ec_uses_fastest_window():
    pl = StaticEC(3, 2).schedule(item(), make_state([0.01] * 8))
    assert pl.nodes == (0, 1, 2, 3, 4)


def test_daos_picks_cheapest_entry():
    pl = DaosAdaptive().schedule(item(rt=0.9), make_state([0.001] * 10))
    assert (pl.k, pl.p) == (8, 1)


def test_daos_falls_back_to_replication():
    # 1 - 0.05^4 clears five nines; every cheaper entry falls short on six nodes
    pl = DaosAdaptive().schedule(item(rt=0.99999), make_state([0.05] * 6))
    assert (pl.k, pl.p) == (1, 3)


def test_capacity_rejection_reason():
    s = make_state([0.01] * 6, capacity=10 * MB)
    d = GreedyLeastUsed().schedule(item(size=500 * MB), s)
    assert d == Rejected(Reason.CAPACITY_EXHAUSTED)


def test_daos_replan_keeps_configuration():
    s = make_state([0.001] * 12)
    it = item(rt=0.9)
    old = DaosAdaptive().schedule(it, s)
    s.kill(old.nodes[0])
    new = DaosAdaptive().replan(it, s, old)
    assert (new.k, new.p) == (old.k, old.p) and old.nodes[0] not in new.nodes


# ---- oracle agreement and safety -----------------------------------------

afr_st = st.floats(0.0, 0.5)
cluster_st = st.integers(3, 9).flatmap(
    lambda n: st.tuples(
        st.lists(afr_st, min_size=n, max_size=n),
        st.lists(st.integers(0, 1000), min_size=n, max_size=n),
    )
)


def fuzz_state(afrs, frees):
    cap = 1000
    nodes = make_nodes(afrs, capacity=cap, free=frees,
                       write_bw=[(50 + (i * 37) % 200) * MB for i in range(len(afrs))])
    return ClusterState.from_nodes(nodes)


@given(cluster_st, st.integers(1, 900), st.sampled_from([0.9, 0.99, 0.999, 0.9999, 0.99999]))
def test_gms_matches_oracle(cluster, size, rt):
    s = fuzz_state(*cluster)
    it = DataItem(0, size, 0.0, 365.0, rt)
    got = GreedyMinStorage().schedule(it, s)
    want = gms_oracle(it, s)
    if want is None:
        assert isinstance(got, Rejected)
    else:
        assert (got.k, list(got.nodes)) == want


@given(cluster_st, st.integers(1, 900), st.sampled_from([0.9, 0.99, 0.999]))
def test_lb_matches_oracle(cluster, size, rt):
    s = fuzz_state(*cluster)
    it = DataItem(0, size, 0.0, 365.0, rt)
    got = DrexLB().schedule(it, s)
    want = lb_oracle(it, s)
    if want is None:
        assert isinstance(got, Rejected)
    else:
        assert (got.k, got.p) == want


@pytest.mark.parametrize("name", ["drex-sc", "drex-lb", "greedy-min-storage", "greedy-least-used", "daos", "ec(3,2)"])
@given(cluster=cluster_st, size=st.integers(1, 900), rt=st.floats(0.5, 0.99999), dead=st.integers(0, 8))
def test_decisions_respect_target_and_space(name, cluster, size, rt, dead):
    s = fuzz_state(*cluster)
    if dead < len(s.nodes):
        s.kill(dead)
    it = DataItem(0, size, 0.0, 365.0, rt)
    d = get_scheduler(name).schedule(it, s, TimeModel.zero())
    if isinstance(d, Placement):
        assert violations(it, s, d) == []
        s.apply_placement(d)
