"""Command-line entry point: simulate, sweep, compare, calibrate, gen-trace.

Exit codes: 0 success, 2 usage or input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from drex import codec, perfmodel, simulator, traceio
from drex.errors import DrexError, InputError
from drex.schedulers import SCHEDULER_NAMES, get_scheduler

DEFAULT_RTS = "0.9,0.99,0.999,0.9999,0.99999"
COMPARE_HEADER = ["scheduler_a", "scheduler_b", "matched_items", "throughput_a_mbs", "throughput_b_mbs", "delta_mbs"]


def _default_seed() -> int:
    raw = os.environ.get("DREX_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"DREX_SEED must be an integer, got {raw!r}") from None


def _flag(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


# ---- inputs ---------------------------------------------------------------


def resolve_catalog(ref: str):
    """A catalog file path, or the name of a bundled sample catalog."""
    path = Path(ref)
    if path.exists():
        return traceio.load_catalog(path), path
    stem = path.name.removesuffix(".csv")
    if stem in traceio.SAMPLE_CATALOGS and path.parent == Path("."):
        sample = traceio.sample_catalog_path(stem)
        return traceio.load_catalog(sample), sample
    return traceio.load_catalog(path), path  # raises CatalogFormat for the missing file


def resolve_trace(ref: str, retention: float):
    path = Path(ref)
    if path.exists():
        return traceio.load_trace(path, retention), path
    if path.name.removesuffix(".csv") in ("meva_sample", "meva") and path.parent == Path("."):
        sample = traceio.sample_trace_path()
        return traceio.load_trace(sample, retention), sample
    return traceio.load_trace(path, retention), path


def _guard_outputs(inputs, outputs) -> None:
    resolved = {Path(p).resolve() for p in inputs if p is not None}
    for out in outputs:
        if out is not None and Path(out).resolve() in resolved:
            raise InputError(f"refusing to overwrite input file {out}")


def _load_inputs(args):
    nodes, cat_path = resolve_catalog(args.catalog)
    if args.capacity_scale != 1.0:
        nodes = traceio.scale_catalog(nodes, args.capacity_scale)
    items, trace_path = resolve_trace(args.trace, args.retention_days)
    return nodes, items, cat_path, trace_path


def _sim_config(args, scheduler: str, rt: str, seed: int) -> simulator.SimConfig:
    get_scheduler(scheduler)
    return simulator.SimConfig(
        scheduler=scheduler,
        rng_seed=seed,
        failure_injection=args.failures,
        read_once=not args.no_read,
        rt_policy=rt,
        recovery=args.recovery,
        count_recovery_io=args.count_recovery_io,
        drain_days=args.drain_days,
        drain_until_failures=args.drain_until_failures,
    )


def _clock(args):
    return codec.FakeClock(1e-6) if args.fake_clock else time.perf_counter


def _write_rows(rows, out) -> None:
    if out:
        traceio.write_summary_csv(rows, out)
    else:
        traceio.write_summary_csv(rows, sys.stdout)


# ---- subcommands ----------------------------------------------------------


def cmd_simulate(args) -> int:
    nodes, items, cat_path, trace_path = _load_inputs(args)
    _guard_outputs([cat_path, trace_path, args.config], [args.report, args.summary])
    cfg = _sim_config(args, args.scheduler, args.rt, args.seed)
    report = simulator.run(items, nodes, cfg, clock=_clock(args))
    if args.report:
        traceio.write_reports_jsonl([report], args.report)
    _write_rows([simulator.summary_row(report, cat_path.name, trace_path.name)], args.summary)
    return 0


def _sweep_one(task):
    nodes, items, cfg, cat_name, trace_name, fake = task
    clock = codec.FakeClock(1e-6) if fake else time.perf_counter
    report = simulator.run(items, nodes, cfg, clock=clock)
    return simulator.summary_row(report, cat_name, trace_name), report


def _rt_key(rt: str):
    try:
        return (0, float(rt), "")
    except ValueError:
        return (1, 0.0, rt)


def cmd_sweep(args) -> int:
    nodes, items, cat_path, trace_path = _load_inputs(args)
    _guard_outputs([cat_path, trace_path, args.config], [args.report, args.summary])
    schedulers = split_schedulers(args.schedulers)
    rts = [r.strip() for r in args.rts.split(",") if r.strip()]
    seeds = _parse_seeds(args.seeds, args.seed)
    tasks = []
    for sched in schedulers:
        for rt in rts:
            for seed in seeds:
                cfg = _sim_config(args, sched, rt, seed)
                tasks.append((nodes, items, cfg, cat_path.name, trace_path.name, args.fake_clock))
    jobs = args.jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        results = [_sweep_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_sweep_one, tasks))
    results.sort(key=lambda rr: (rr[0]["scheduler"], _rt_key(rr[0]["rt_policy"]), rr[0]["seed"]))
    if args.report:
        traceio.write_reports_jsonl([r for _, r in results], args.report)
    _write_rows([row for row, _ in results], args.summary)
    return 0


def split_schedulers(text: str) -> list[str]:
    """Comma list where ec(K,P) entries keep their inner comma."""
    return [m.strip() for m in re.findall(r"[^,(]*\([^)]*\)|[^,]+", text) if m.strip()]


def _parse_seeds(spec: str | None, default: int) -> list[int]:
    if not spec:
        return [default]
    try:
        if ":" in spec:
            lo, hi = spec.split(":", 1)
            return list(range(int(lo), int(hi)))
        return [int(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"--seeds expects a comma list or lo:hi range, got {spec!r}") from None


def cmd_compare(args) -> int:
    nodes, items, cat_path, trace_path = _load_inputs(args)
    _guard_outputs([cat_path, trace_path, args.config], [args.out])
    clock = _clock(args)
    ra = simulator.run(items, nodes, _sim_config(args, args.a, args.rt, args.seed), clock=clock)
    rb = simulator.run(items, nodes, _sim_config(args, args.b, args.rt, args.seed), clock=clock)
    delta = simulator.matched_throughput(ra, rb)
    common = {r.id for r in ra.records if r.status == "stored"} & {r.id for r in rb.records if r.status == "stored"}

    def tput(rep):
        recs = [r for r in rep.records if r.id in common]
        t = sum(r.io_time for r in recs)
        return sum(r.size for r in recs) / t / 1e6 if t > 0 else 0.0

    row = [args.a, args.b, len(common), f"{tput(ra):.6f}", f"{tput(rb):.6f}", f"{delta:.6f}"]
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        w.writerow(row)
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_calibrate(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",")] if args.sizes else list(codec.DEFAULT_BENCH_SIZES)
    if args.configs:
        configs = []
        for part in args.configs.split(","):
            n, _, k = part.partition(":")
            configs.append((int(n), int(k)))
    else:
        configs = list(codec.DEFAULT_BENCH_CONFIGS)
    if args.median_of < 1:
        raise InputError("--median-of must be at least 1")
    clock = codec.FakeClock(1e-3) if args.fake_clock else time.perf_counter
    samples = codec.bench(sizes, configs, repeats=args.median_of, clock=clock, seed=args.seed)
    if args.out:
        perfmodel.write_calibration_csv(samples, args.out)
    model = perfmodel.fit(samples)
    stream = sys.stderr if not args.out else sys.stdout
    names = ("intercept", "size", "n", "k")
    for label, coeffs in (("encode", model.encode_coeffs), ("decode", model.decode_coeffs)):
        print(label + " " + " ".join(f"{n}={c:.6g}" for n, c in zip(names, coeffs)), file=stream)
    if not args.out:
        perfmodel.write_calibration_csv(samples, sys.stdout)
    return 0


def cmd_gen_trace(args) -> int:
    rt = None if args.rt in (None, "", "blank") else float(args.rt)
    if args.meva:
        items = traceio.meva_like_trace(seed=args.seed)
    else:
        items = traceio.gen_trace(
            args.count,
            args.size_model,
            mean_size=args.mean_mb * traceio.MB,
            std_size=args.std_mb * traceio.MB,
            min_size=args.min_bytes,
            max_size=args.max_bytes,
            arrival=args.arrival,
            span_days=args.span_days,
            retention_days=args.retention_days,
            reliability_target=rt,
            seed=args.seed,
        )
    if args.out:
        traceio.write_trace(items, args.out)
    else:
        traceio.write_trace(items, sys.stdout)
    return 0


# ---- parser ---------------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", required=True, help="catalog CSV, or a sample name such as most_used")
    p.add_argument("--trace", required=True, help="trace CSV, or meva_sample")
    p.add_argument("--rt", default="trace", help="fixed target, 'sample', or 'trace' (default)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--failures", action="store_true", help="inject daily node failures")
    p.add_argument("--recovery", choices=simulator.RECOVERY_MODES, default="replan")
    p.add_argument("--drain-days", type=int, default=0)
    p.add_argument("--drain-until-failures", type=int, default=None)
    p.add_argument("--count-recovery-io", action="store_true")
    p.add_argument("--no-read", action="store_true", help="leave read and decode out of the throughput")
    p.add_argument("--capacity-scale", type=float, default=1.0)
    p.add_argument("--retention-days", type=float, default=traceio.DEFAULT_RETENTION_DAYS)
    p.add_argument("--fake-clock", action="store_true", help="deterministic scheduler timing")
    p.add_argument("--config", default=None, help="key=value file; command-line flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drex", description="Erasure-coded placement simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scheduler over one trace")
    _add_run_options(p)
    p.add_argument("--scheduler", required=True, help=" | ".join(SCHEDULER_NAMES) + " | ec(K,P)")
    p.add_argument("--report", help="JSONL report path")
    p.add_argument("--summary", help="summary CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="schedulers x targets x seeds")
    _add_run_options(p)
    p.add_argument("--schedulers", default=",".join(SCHEDULER_NAMES))
    p.add_argument("--rts", default=DEFAULT_RTS)
    p.add_argument("--seeds", default=None, help="comma list or lo:hi range (default: --seed)")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--report", help="JSONL report path")
    p.add_argument("--summary", help="summary CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="matched-subset throughput difference of two schedulers")
    _add_run_options(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("calibrate", help="benchmark the codec and fit the time model")
    p.add_argument("--sizes", help="comma list of payload sizes in bytes")
    p.add_argument("--configs", help="comma list of n:k pairs")
    p.add_argument("--median-of", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fake-clock", action="store_true")
    p.add_argument("--out", help="calibration CSV path (default: stdout)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--size-model", choices=("lognormal", "empirical"), default="lognormal")
    p.add_argument("--mean-mb", type=float, default=traceio.MEVA_STATS["mean"] / traceio.MB)
    p.add_argument("--std-mb", type=float, default=traceio.MEVA_STATS["std"] / traceio.MB)
    p.add_argument("--min-bytes", type=int, default=1)
    p.add_argument("--max-bytes", type=int, default=None)
    p.add_argument("--arrival", choices=("uniform", "poisson"), default="uniform")
    p.add_argument("--span-days", type=float, default=traceio.MEVA_SPAN_DAYS)
    p.add_argument("--retention-days", type=float, default=traceio.DEFAULT_RETENTION_DAYS)
    p.add_argument("--rt", default=None, help="fixed target written to every row (default: blank)")
    p.add_argument("--meva", action="store_true", help="MEVA-shaped preset; ignores size options")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_gen_trace)
    return parser


def _config_tokens(sub: argparse.ArgumentParser, path: str) -> list[str]:
    """Translate a key=value file into flags placed before the real ones."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror or exc}") from None
    actions = {opt: a for a in sub._actions for opt in a.option_strings}
    tokens: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected key=value")
        opt = "--" + key.strip().replace("_", "-")
        action = actions.get(opt)
        if action is None or opt == "--config":
            raise InputError(f"{path}:{lineno}: unknown setting {key.strip()!r}")
        value = value.strip()
        if action.nargs == 0:
            if _flag(value):
                tokens.append(opt)
        else:
            tokens += [opt, value]
    return tokens


def _find_config(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    config = _find_config(argv)
    if config is not None and argv and not argv[0].startswith("-"):
        sub = parser._subparsers._group_actions[0].choices.get(argv[0])
        if sub is not None:
            argv = [argv[0], *_config_tokens(sub, config), *argv[1:]]
    args = parser.parse_args(argv)
    if getattr(args, "seed", "absent") is None:
        args.seed = _default_seed()
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else 2
    except (DrexError, ValueError) as exc:
        code = 2 if isinstance(exc, (InputError, ValueError)) else 1
        print(f"drex: error: {exc}", file=sys.stderr)
        return code
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"drex: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
