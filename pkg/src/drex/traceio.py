"""Node catalogs, workload traces, synthetic workloads and result files."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from collections.abc import Sequence
from importlib import resources
from pathlib import Path

import numpy as np

from drex.errors import CatalogFormat, SpecInvalid, TraceFormat
from drex.model import MB, TB, DataItem, StorageNode

CATALOG_HEADER = ["name", "capacity_tb", "write_bw_mbs", "read_bw_mbs", "afr"]
TRACE_HEADER = ["item_id", "size_bytes", "submit_epoch_s", "retention_days", "reliability_target"]
SUMMARY_HEADER = [
    "scheduler", "catalog", "trace", "rt_policy", "seed", "stored_bytes",
    "proportion", "throughput_mbs", "retained_pct", "mean_sched_us", "reason",
]
DEFAULT_RETENTION_DAYS = 365.0
SAMPLE_CATALOGS = ("most_used", "most_unreliable", "most_reliable", "homogeneous")

# MEVA per-item statistics: count, mean, min, max, std
MEVA_STATS = {"count": 4157, "mean": 117.1 * MB, "min": 1.4 * MB, "max": 856.1 * MB, "std": 68.1 * MB}
MEVA_SPAN_DAYS = 70


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _rows(text: str) -> list[list[str]]:
    # csv handles LF and CRLF; values are parsed with float()/int(), never locale-aware
    return list(csv.reader(io.StringIO(text)))


def sample_catalog_path(name: str) -> Path:
    if name not in SAMPLE_CATALOGS:
        raise KeyError(f"unknown sample catalog {name!r}; choose from {SAMPLE_CATALOGS}")
    return Path(str(resources.files("drex.data").joinpath(f"{name}.csv")))


def sample_trace_path() -> Path:
    return Path(str(resources.files("drex.data").joinpath("meva_sample.csv")))


def parse_catalog(text: str) -> list[StorageNode]:
    rows = _rows(text)
    if not rows or [c.strip() for c in rows[0]] != CATALOG_HEADER:
        raise CatalogFormat(1, f"header must be {','.join(CATALOG_HEADER)}")
    nodes: list[StorageNode] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CATALOG_HEADER):
            raise CatalogFormat(lineno, f"expected {len(CATALOG_HEADER)} fields, got {len(row)}")
        name = row[0].strip()
        try:
            cap_tb, wbw, rbw, afr = (float(c) for c in row[1:])
        except ValueError as exc:
            raise CatalogFormat(lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in (cap_tb, wbw, rbw, afr)):
            raise CatalogFormat(lineno, "non-finite value")
        if not 0 <= afr < 1:
            raise CatalogFormat(lineno, f"afr {afr} outside [0, 1)")
        capacity = round(cap_tb * TB)
        if capacity <= 0 or wbw <= 0 or rbw <= 0:
            raise CatalogFormat(lineno, "capacity and bandwidths must be positive")
        nodes.append(StorageNode(len(nodes), capacity, wbw * MB, rbw * MB, afr, name=name))
    if not nodes:
        raise CatalogFormat(1, "catalog has no nodes")
    return nodes


def load_catalog(path) -> list[StorageNode]:
    try:
        text = _read_text(path)
    except OSError as exc:
        raise CatalogFormat(0, f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_catalog(text)


def write_catalog(nodes: Sequence[StorageNode], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_HEADER)
        for n in nodes:
            w.writerow([n.name or f"node{n.id}", repr(n.capacity / TB), repr(n.write_bw / MB),
                        repr(n.read_bw / MB), repr(n.afr)])


def scale_catalog(nodes: Sequence[StorageNode], factor: float) -> list[StorageNode]:
    """Shrink (or grow) every capacity by `factor`; used to run saturating workloads at desk scale."""
    if factor <= 0:
        raise ValueError("capacity scale must be positive")
    return [
        StorageNode(n.id, max(1, round(n.capacity * factor)), n.write_bw, n.read_bw, n.afr, name=n.name)
        for n in nodes
    ]


def parse_trace(text: str, default_retention: float = DEFAULT_RETENTION_DAYS) -> list[DataItem]:
    rows = _rows(text)
    if not rows or [c.strip() for c in rows[0]] != TRACE_HEADER:
        raise TraceFormat(1, f"header must be {','.join(TRACE_HEADER)}")
    items: list[DataItem] = []
    seen: set[int] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(TRACE_HEADER):
            raise TraceFormat(lineno, f"expected {len(TRACE_HEADER)} fields, got {len(row)}")
        raw = [c.strip() for c in row]
        try:
            item_id = int(raw[0])
            size = int(raw[1])
            submit = float(raw[2])
            retention = float(raw[3]) if raw[3] else default_retention
            target = float(raw[4]) if raw[4] else None
        except ValueError as exc:
            raise TraceFormat(lineno, str(exc)) from None
        if item_id in seen:
            raise TraceFormat(lineno, f"duplicate item_id {item_id}")
        if size < 1:
            raise TraceFormat(lineno, "size_bytes must be at least 1")
        if not math.isfinite(submit):
            raise TraceFormat(lineno, "submit_epoch_s must be finite")
        if not retention > 0 or not math.isfinite(retention):
            raise TraceFormat(lineno, "retention_days must be positive")
        if target is not None and not 0 < target < 1:
            raise TraceFormat(lineno, "reliability_target must lie in (0, 1)")
        seen.add(item_id)
        items.append(DataItem(item_id, size, submit, retention, target))
    return sort_trace(items)


def load_trace(path, default_retention: float = DEFAULT_RETENTION_DAYS) -> list[DataItem]:
    try:
        text = _read_text(path)
    except OSError as exc:
        raise TraceFormat(0, f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_trace(text, default_retention)


def sort_trace(items: Sequence[DataItem]) -> list[DataItem]:
    return sorted(items, key=lambda d: d.submit_time)


def write_trace(items: Sequence[DataItem], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for d in items:
            rt = "" if d.reliability_target is None else repr(d.reliability_target)
            w.writerow([d.id, d.size, repr(float(d.submit_time)), repr(float(d.retention)), rt])
    finally:
        if own:
            fh.close()


def _nines(x: int) -> float:
    if x == -1:
        return 90.0
    if x == 5:
        return 99.99999
    return 100.0 - 10.0 ** (-x)


def sample_reliability_target(rng: np.random.Generator) -> float:
    """Random "number of nines" target in [0.90, 0.9999999]."""
    x = int(rng.integers(-1, 6))
    if x == 5:
        return 0.9999999
    return float(rng.uniform(_nines(x), _nines(x + 1))) / 100.0


def _lognormal_params(mean: float, std: float) -> tuple[float, float]:
    sigma2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - sigma2 / 2, math.sqrt(sigma2)


def gen_trace(
    count: int,
    size_model: str = "lognormal",
    *,
    mean_size: float = MEVA_STATS["mean"],
    std_size: float = MEVA_STATS["std"],
    min_size: int = 1,
    max_size: int | None = None,
    empirical_sizes: Sequence[int] | None = None,
    arrival: str = "uniform",
    span_days: float = MEVA_SPAN_DAYS,
    retention_days: float = DEFAULT_RETENTION_DAYS,
    reliability_target: float | None = None,
    seed: int = 0,
    start_id: int = 0,
) -> list[DataItem]:
    """Synthetic workload, deterministic in `seed`.

    size_model: "lognormal" (moment-matched to mean_size/std_size) or
    "empirical" (resample `empirical_sizes`). arrival: "uniform" (sorted
    uniform times over span_days) or "poisson" (exponential gaps with mean
    span_days/count).
    """
    if count < 0:
        raise SpecInvalid("count must be non-negative")
    if span_days < 0:
        raise SpecInvalid("span_days must be non-negative")
    if retention_days <= 0:
        raise SpecInvalid("retention_days must be positive")
    if reliability_target is not None and not 0 < reliability_target < 1:
        raise SpecInvalid("reliability_target must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    if count == 0:
        return []
    if size_model == "lognormal":
        if mean_size <= 0 or std_size < 0:
            raise SpecInvalid("lognormal needs mean > 0 and std >= 0")
        mu, sigma = _lognormal_params(mean_size, std_size)
        sizes = rng.lognormal(mu, sigma, count)
    elif size_model == "empirical":
        if not empirical_sizes:
            raise SpecInvalid("empirical size model needs a non-empty size table")
        sizes = rng.choice(np.asarray(empirical_sizes, dtype=np.float64), count)
    else:
        raise SpecInvalid(f"unknown size model {size_model!r}")
    sizes = np.clip(np.rint(sizes), max(1, min_size), max_size if max_size else None).astype(np.int64)
    span = span_days * 86400.0
    if arrival == "uniform":
        times = np.sort(rng.uniform(0.0, span, count))
    elif arrival == "poisson":
        times = np.cumsum(rng.exponential(span / count, count))
    else:
        raise SpecInvalid(f"unknown arrival model {arrival!r}")
    return [
        DataItem(start_id + i, int(s), float(round(t, 3)), retention_days, reliability_target)
        for i, (s, t) in enumerate(zip(sizes, times))
    ]


def meva_like_trace(seed: int = 2024) -> list[DataItem]:
    """4157 items whose count, mean, min and max match the published MEVA statistics."""
    st = MEVA_STATS
    items = gen_trace(st["count"], mean_size=st["mean"], std_size=st["std"], seed=seed)
    sizes = np.array([d.size for d in items], dtype=np.float64)
    lo, hi = int(np.argmin(sizes)), int(np.argmax(sizes))
    interior = np.ones(len(sizes), dtype=bool)
    interior[[lo, hi]] = False
    target_sum = st["mean"] * len(sizes) - st["min"] - st["max"]
    for _ in range(20):
        sizes[interior] *= target_sum / sizes[interior].sum()
        sizes[interior] = np.clip(sizes[interior], st["min"], st["max"])
    sizes[lo], sizes[hi] = st["min"], st["max"]
    return [dataclasses.replace(d, size=int(round(s))) for d, s in zip(items, sizes)]


def trace_total(items: Sequence[DataItem]) -> int:
    return sum(d.size for d in items)


def trim_to(items: Sequence[DataItem], total_bytes: int) -> list[DataItem]:
    """Longest prefix whose total size does not exceed `total_bytes`."""
    out, acc = [], 0
    for d in items:
        if acc + d.size > total_bytes:
            break
        out.append(d)
        acc += d.size
    return out


def repeat_to(items: Sequence[DataItem], total_bytes: int) -> list[DataItem]:
    """Append shifted copies of the trace until its total reaches `total_bytes`.

    Copies get fresh ids and timestamps offset by the trace span plus one second.
    """
    if not items:
        if total_bytes > 0:
            raise SpecInvalid("cannot repeat an empty trace")
        return []
    items = sort_trace(items)
    t0, t1 = items[0].submit_time, items[-1].submit_time
    period = (t1 - t0) + 1.0
    next_id = max(d.id for d in items) + 1
    out = list(items)
    acc = trace_total(items)
    copy_no = 1
    while acc < total_bytes:
        for d in items:
            if acc >= total_bytes:
                break
            out.append(dataclasses.replace(d, id=next_id, submit_time=d.submit_time + copy_no * period))
            next_id += 1
            acc += d.size
        copy_no += 1
    return out


def write_reports_jsonl(reports, path, mode: str = "w") -> None:
    with open(path, mode, encoding="utf-8", newline="\n") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")


def write_summary_csv(rows: Sequence[dict], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in SUMMARY_HEADER})
    finally:
        if own:
            fh.close()
