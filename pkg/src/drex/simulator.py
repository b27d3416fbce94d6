"""Trace-driven replay of one scheduler over one node catalog.

Items are handled strictly in submission order. Failure injection happens at
simulated day boundaries: each live node, in ascending id, draws one uniform
number from the run's failure stream and dies when it is at most the node's
daily failure probability. Every death triggers `recover` immediately.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from drex.errors import EmptyIntersection, InputError
from drex.model import ClusterState, DataItem, Placement, StorageNode
from drex.perfmodel import TimeModel, default_model, transfer_time
from drex.reliability import availability, daily_failure_prob, failure_prob
from drex.schedulers import Rejected, Scheduler, get_scheduler
from drex.traceio import sample_reliability_target, sort_trace

DAY_S = 86400.0
RECOVERY_MODES = ("replace", "replan")
# safety stop for post-trace failure draining
MAX_DRAIN_DAYS = 1_000_000


@dataclass(frozen=True)
class SimConfig:
    """One run's knobs.

    rt_policy: a number in (0, 1) applied to every item, "sample" to draw every
    target from the target sampler, or "trace" to keep trace values and sample
    only blanks. recovery: "replace" moves the lost chunk to a spare node or
    drops the item; "replan" falls back to a fresh decision from the
    scheduler instead of dropping (static codes keep their (k, p)).
    After the last submission, failure draws continue for `drain_days` days,
    or until `drain_until_failures` nodes have died when that is set.
    """

    scheduler: str
    rng_seed: int = 0
    failure_injection: bool = False
    year_days: float = 365.0
    read_once: bool = True
    rt_policy: str = "trace"
    recovery: str = "replan"
    count_recovery_io: bool = False
    drain_days: int = 0
    drain_until_failures: int | None = None

    def __post_init__(self):
        if not 0 <= self.rng_seed < 2**64:
            raise InputError("rng_seed must be a 64-bit unsigned integer")
        if self.recovery not in RECOVERY_MODES:
            raise InputError(f"recovery must be one of {RECOVERY_MODES}")
        if self.year_days <= 0:
            raise InputError("year_days must be positive")
        if self.drain_days < 0:
            raise InputError("drain_days must be non-negative")
        fixed_rt(self.rt_policy)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def fixed_rt(policy) -> float | None:
    """The fixed target encoded by an rt policy, or None for "sample"/"trace"."""
    if policy in ("sample", "trace"):
        return None
    try:
        value = float(policy)
    except (TypeError, ValueError):
        raise InputError(f"rt policy must be a probability, 'sample' or 'trace', got {policy!r}") from None
    if not 0 < value < 1:
        raise InputError(f"reliability target {value} outside (0, 1)")
    return value


@dataclass
class ItemRecord:
    id: int
    size: int
    target: float
    status: str  # stored | rejected | lost | removed
    retention: float = 365.0
    reason: str = ""
    k: int = 0
    p: int = 0
    nodes: tuple[int, ...] = ()
    chunk_size: int = 0
    encode_s: float = 0.0
    write_s: float = 0.0
    read_s: float = 0.0
    decode_s: float = 0.0
    recovery_s: float = 0.0
    sched_s: float = 0.0

    @property
    def io_time(self) -> float:
        return self.encode_s + self.write_s + self.read_s + self.decode_s


@dataclass
class FailureEvent:
    day: int
    node: int
    repaired: int
    replanned: int
    lost: int
    removed: int
    stored_items: int
    placed_items: int

    @property
    def retained(self) -> float:
        return self.stored_items / self.placed_items if self.placed_items else 1.0


@dataclass
class SimReport:
    config: SimConfig
    total_submitted_bytes: int
    stored_bytes: int
    throughput: float  # bytes per second
    records: list[ItemRecord]
    failures: list[FailureEvent]
    sched_mean_s: float
    sched_max_s: float
    node_free: list[int] = field(default_factory=list)
    node_alive: list[bool] = field(default_factory=list)

    @property
    def proportion_stored(self) -> float:
        return self.stored_bytes / self.total_submitted_bytes if self.total_submitted_bytes else 0.0

    @property
    def placed_items(self) -> int:
        return sum(r.status != "rejected" for r in self.records)

    @property
    def retained_after_failures(self) -> float:
        placed = self.placed_items
        if not placed:
            return 0.0
        return sum(r.status == "stored" for r in self.records) / placed

    def retained_at(self, failures: int) -> float | None:
        """Retained item fraction right after the n-th node failure, if it happened."""
        if failures == 0:
            return 1.0
        if len(self.failures) < failures:
            return None
        return self.failures[failures - 1].retained

    def rejection_reasons(self) -> Counter:
        return Counter(r.reason for r in self.records if r.status == "rejected")

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "total_submitted_bytes": self.total_submitted_bytes,
            "stored_bytes": self.stored_bytes,
            "proportion_stored": self.proportion_stored,
            "throughput_bps": self.throughput,
            "retained_after_failures": self.retained_after_failures,
            "scheduler_overhead": {"mean_s": self.sched_mean_s, "max_s": self.sched_max_s},
            "failures": [dataclasses.asdict(f) for f in self.failures],
            "node_free": self.node_free,
            "node_alive": self.node_alive,
            "items": [dataclasses.asdict(r) for r in self.records],
        }


def _item_times(model: TimeModel, item: DataItem, placement: Placement, nodes: list[StorageNode]):
    return (
        model.predict_encode(item.size, placement.n, placement.k),
        transfer_time(placement.chunk_size, nodes, "write"),
        transfer_time(placement.chunk_size, nodes, "read"),
        model.predict_decode(item.size, placement.k),
    )


def _meets_target(state: ClusterState, nodes, p: int, retention: float, target: float) -> bool:
    probs = [failure_prob(state.nodes[n].afr, retention) for n in nodes]
    return availability(probs, p) >= target


def recover(
    state: ClusterState,
    dead_node_id: int,
    scheduler: Scheduler,
    time_model: TimeModel,
    records: dict[int, ItemRecord | DataItem],
    mode: str = "replace",
) -> dict[int, str]:
    """Repair every item with a chunk on a node that just died.

    ``records`` supplies each stored item's target and retention (ItemRecord
    or DataItem); ItemRecords are updated in place. Returns {item id:
    outcome} with outcomes "repaired", "replanned", "lost" (fewer than k
    chunks survive) or "removed" (target no longer reachable).
    """
    if mode not in RECOVERY_MODES:
        raise ValueError(f"unknown recovery mode {mode!r}")
    if state.nodes[dead_node_id].alive:
        state.kill(dead_node_id)
    outcomes = {}
    for item_id in state.items_on(dead_node_id):
        placement = state.placements[item_id]
        item = records[item_id]
        target = item.target if isinstance(item, ItemRecord) else item.reliability_target
        record = item if isinstance(item, ItemRecord) else None
        survivors = [n for n in placement.nodes if state.nodes[n].alive]
        if len(survivors) < placement.k:
            state.remove_placement(item_id)
            outcomes[item_id] = "lost"
            continue
        used = set(placement.nodes)
        repaired = False
        for cand in scheduler.preference_order(state):
            if cand.id in used or cand.free < placement.chunk_size:
                continue
            nodes = [cand.id if n == dead_node_id else n for n in placement.nodes]
            if _meets_target(state, nodes, placement.p, item.retention, target):
                updated = state.replace_chunk(item_id, dead_node_id, cand.id)
                repaired = True
                if record is not None:
                    record.nodes = updated.nodes
                    record.recovery_s += (
                        time_model.predict_decode(record.size, placement.k)
                        + time_model.predict_encode(record.size, placement.n, placement.k)
                        + placement.chunk_size / cand.write_bw
                    )
                break
        if repaired:
            outcomes[item_id] = "repaired"
            continue
        state.remove_placement(item_id)
        if mode == "replan":
            fresh = DataItem(item_id, item.size, retention=item.retention, reliability_target=target)
            decision = scheduler.replan(fresh, state, placement, time_model)
            if not isinstance(decision, Rejected):
                state.apply_placement(decision)
                if record is not None:
                    record.k, record.p, record.nodes, record.chunk_size = (
                        decision.k, decision.p, decision.nodes, decision.chunk_size)
                    nodes = [state.nodes[n] for n in decision.nodes]
                    record.recovery_s += time_model.predict_decode(record.size, placement.k) + sum(
                        _item_times(time_model, fresh, decision, nodes)[:2])
                outcomes[item_id] = "replanned"
                continue
        outcomes[item_id] = "removed"
    for item_id, outcome in outcomes.items():
        if outcome in ("lost", "removed") and isinstance(records[item_id], ItemRecord):
            records[item_id].status = outcome
    return outcomes


class _Run:
    def __init__(self, catalog, config: SimConfig, time_model, clock):
        if not catalog:
            raise InputError("catalog is empty")
        nodes = [dataclasses.replace(n, id=i) for i, n in enumerate(catalog)]
        self.state = ClusterState.from_nodes(nodes)
        self.config = config
        self.scheduler = get_scheduler(config.scheduler)
        self.model = time_model if time_model is not None else default_model()
        self.clock = clock
        fail_seq, rt_seq = np.random.SeedSequence(config.rng_seed).spawn(2)
        self.fail_rng = np.random.default_rng(fail_seq)
        self.rt_rng = np.random.default_rng(rt_seq)
        self.p_day = [daily_failure_prob(n.afr, config.year_days) for n in nodes]
        self.records: dict[int, ItemRecord] = {}
        self.failures: list[FailureEvent] = []
        self.sched_times: list[float] = []
        self.fixed = fixed_rt(config.rt_policy)

    def target_for(self, item: DataItem) -> float:
        if self.fixed is not None:
            return self.fixed
        if self.config.rt_policy == "trace" and item.reliability_target is not None:
            return item.reliability_target
        return sample_reliability_target(self.rt_rng)

    def submit(self, item: DataItem) -> None:
        target = self.target_for(item)
        item = dataclasses.replace(item, reliability_target=target)
        self.state.observe_item(item.size)
        t0 = self.clock()
        decision = self.scheduler.schedule(item, self.state, self.model)
        elapsed = self.clock() - t0
        self.sched_times.append(elapsed)
        record = ItemRecord(item.id, item.size, target, "rejected", item.retention, sched_s=elapsed)
        if isinstance(decision, Rejected):
            record.reason = str(decision.reason)
        else:
            self.state.apply_placement(decision)
            nodes = [self.state.nodes[n] for n in decision.nodes]
            enc, wr, rd, dec = _item_times(self.model, item, decision, nodes)
            if not self.config.read_once:
                rd, dec = 0.0, 0.0
            record.status = "stored"
            record.k, record.p, record.nodes, record.chunk_size = decision.k, decision.p, decision.nodes, decision.chunk_size
            record.encode_s, record.write_s, record.read_s, record.decode_s = enc, wr, rd, dec
        if item.id in self.records:
            raise InputError(f"duplicate item id {item.id}")
        self.records[item.id] = record

    def fail_day(self, day: int) -> None:
        for node in self.state.nodes:
            if not node.alive:
                continue
            if self.fail_rng.random() <= self.p_day[node.id]:
                self.state.kill(node.id)
                out = recover(self.state, node.id, self.scheduler, self.model, self.records, self.config.recovery)
                tally = Counter(out.values())
                self.failures.append(
                    FailureEvent(
                        day=day,
                        node=node.id,
                        repaired=tally["repaired"],
                        replanned=tally["replanned"],
                        lost=tally["lost"],
                        removed=tally["removed"],
                        stored_items=len(self.state.placements),
                        placed_items=sum(r.status != "rejected" for r in self.records.values()),
                    )
                )

    def drain(self, day: int) -> None:
        cfg = self.config
        for _ in range(cfg.drain_days):
            day += 1
            self.fail_day(day)
        if cfg.drain_until_failures is None:
            return
        for _ in range(MAX_DRAIN_DAYS):
            if len(self.failures) >= cfg.drain_until_failures or not any(p > 0 for p, n in zip(self.p_day, self.state.nodes) if n.alive):
                return
            day += 1
            self.fail_day(day)

    def report(self, items: Sequence[DataItem]) -> SimReport:
        records = [self.records[d.id] for d in items]
        stored = [r for r in records if r.status == "stored"]
        w = sum(r.size for r in stored)
        denom = sum(r.io_time for r in stored)
        if self.config.count_recovery_io:
            denom += sum(r.recovery_s for r in records)
        times = self.sched_times
        return SimReport(
            config=self.config,
            total_submitted_bytes=sum(d.size for d in items),
            stored_bytes=w,
            throughput=w / denom if denom > 0 else 0.0,
            records=records,
            failures=self.failures,
            sched_mean_s=sum(times) / len(times) if times else 0.0,
            sched_max_s=max(times, default=0.0),
            node_free=[n.free for n in self.state.nodes],
            node_alive=[n.alive for n in self.state.nodes],
        )


def run(
    trace: Sequence[DataItem],
    catalog: Sequence[StorageNode],
    config: SimConfig,
    time_model: TimeModel | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> SimReport:
    items = sort_trace(trace)
    sim = _Run(catalog, config, time_model, clock)
    day = None
    for item in items:
        today = math.floor(item.submit_time / DAY_S)
        if day is None:
            day = today
        while day < today:
            if config.failure_injection:
                sim.fail_day(day)
            day += 1
        sim.submit(item)
    if config.failure_injection:
        if day is None:
            day = 0
        else:
            # close out the last submission day, then drain
            sim.fail_day(day)
        sim.drain(day)
    return sim.report(items)


def matched_throughput(a: SimReport, b: SimReport) -> float:
    """T_a - T_b in MB/s over the items both runs still hold."""
    ra = {r.id: r for r in a.records if r.status == "stored"}
    rb = {r.id: r for r in b.records if r.status == "stored"}
    common = sorted(ra.keys() & rb.keys())
    if not common:
        raise EmptyIntersection("no item is stored by both runs")

    def tput(recs):
        size = sum(recs[i].size for i in common)
        t = sum(recs[i].io_time for i in common)
        return size / t if t > 0 else 0.0

    return (tput(ra) - tput(rb)) / 1e6


def summary_row(report: SimReport, catalog: str, trace: str) -> dict:
    reason = ""
    if report.stored_bytes == 0:
        reasons = report.rejection_reasons()
        if reasons:
            reason = sorted(reasons.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return {
        "scheduler": report.config.scheduler,
        "catalog": catalog,
        "trace": trace,
        "rt_policy": report.config.rt_policy,
        "seed": report.config.rng_seed,
        "stored_bytes": report.stored_bytes,
        "proportion": f"{report.proportion_stored:.6f}",
        "throughput_mbs": f"{report.throughput / 1e6:.6f}",
        "retained_pct": f"{100 * report.retained_after_failures:.4f}",
        "mean_sched_us": f"{report.sched_mean_s * 1e6:.3f}",
        "reason": reason,
    }
