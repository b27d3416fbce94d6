"""Systematic Reed-Solomon erasure codec over GF(2^8).

Field arithmetic uses the 0x11D primitive polynomial with log/antilog tables.
The generator is ``[I_k ; A]`` where ``A`` is derived from a Vandermonde
matrix ``V`` as the parity rows of ``V @ inv(V[:k])`` and then row/column
normalised so its first row and first column are all ones. Every square
submatrix of ``A`` stays non-singular under that scaling, so any k of the
k+p shards recover the payload, and a single parity shard is plain XOR.

Bulk byte arithmetic runs through one dense kernel, `_gf_matmul`, which
multiplies a coefficient matrix by a stack of shards with 16-bit pair lookup
tables. Decoding with erasures inverts the k x k submatrix of the surviving
rows and applies the full inverse to the k received shards.
"""

from __future__ import annotations

import struct
import time
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from functools import lru_cache
from statistics import median

import numpy as np

from drex.errors import ConfigInvalid, InsufficientShards, ShardSizeMismatch
from drex.perfmodel import CalibrationSample

PRIM_POLY = 0x11D
HEADER = 8
ALIGN = 64

EXP = [0] * 512
LOG = [0] * 256
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIM_POLY
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^8)")
    return EXP[255 - LOG[a]]


def gf_pow(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % 255]


def _mul_table() -> np.ndarray:
    t = np.zeros((256, 256), dtype=np.uint8)
    for a in range(1, 256):
        for b in range(1, 256):
            t[a, b] = EXP[LOG[a] + LOG[b]]
    return t


MUL = _mul_table()


@lru_cache(maxsize=256)
def _pair_table(c: int) -> np.ndarray:
    # maps a little-endian byte pair (lo | hi << 8) to (c*lo | (c*hi) << 8)
    x = np.arange(65536)
    row = MUL[c]
    t = row[x & 0xFF].astype(np.uint16) | (row[x >> 8].astype(np.uint16) << 8)
    t.setflags(write=False)
    return t


def mat_mul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        for t in range(inner):
            ait = a[i][t]
            if ait:
                bt = b[t]
                for j in range(cols):
                    out[i][j] ^= gf_mul(ait, bt[j])
    return out


def mat_inv(m: list[list[int]]) -> list[list[int]]:
    """Gauss-Jordan inverse over GF(2^8); raises ValueError when singular."""
    n = len(m)
    a = [row[:] + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ValueError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = gf_inv(a[col][col])
        a[col] = [gf_mul(v, inv) for v in a[col]]
        for r in range(n):
            f = a[r][col]
            if r != col and f:
                pr = a[col]
                a[r] = [v ^ gf_mul(f, w) for v, w in zip(a[r], pr)]
    return [row[n:] for row in a]


@lru_cache(maxsize=None)
def parity_matrix(k: int, p: int) -> tuple[tuple[int, ...], ...]:
    n = k + p
    vander = [[gf_pow(a, j) for j in range(k)] for a in range(n)]
    systematic = mat_mul(vander, mat_inv(vander[:k]))
    par = [row[:] for row in systematic[k:]]
    for j in range(k):
        s = gf_inv(par[0][j])
        for i in range(p):
            par[i][j] = gf_mul(par[i][j], s)
    for i in range(1, p):
        s = gf_inv(par[i][0])
        par[i] = [gf_mul(v, s) for v in par[i]]
    return tuple(tuple(r) for r in par)


def generator_matrix(k: int, p: int) -> list[list[int]]:
    ident = [[1 if i == j else 0 for j in range(k)] for i in range(k)]
    return ident + [list(r) for r in parity_matrix(k, p)]


def _gf_matmul(coeffs: list[list[int]], shards: list[np.ndarray]) -> list[np.ndarray]:
    """Dense product: out[i] = XOR_j coeffs[i][j] * shards[j] over byte arrays of even length."""
    src = [s.view(np.uint16) for s in shards]
    out = []
    for row in coeffs:
        acc = np.zeros_like(src[0])
        for c, s in zip(row, src):
            np.bitwise_xor(acc, _pair_table(c)[s], out=acc)
        out.append(acc.view(np.uint8))
    return out


@dataclass(frozen=True)
class CodecConfig:
    k: int
    p: int
    shard_size: int = 0

    def __post_init__(self):
        if self.k < 1 or self.p < 1:
            raise ConfigInvalid("codec needs k >= 1 and p >= 1")
        if self.k + self.p > 255:
            raise ConfigInvalid("k + p must not exceed 255 over GF(2^8)")
        if self.shard_size < 0 or self.shard_size % 2:
            raise ConfigInvalid("shard_size must be a non-negative even number")

    @property
    def n(self) -> int:
        return self.k + self.p

    def sized_for(self, payload_len: int) -> CodecConfig:
        return CodecConfig(self.k, self.p, shard_size_for(payload_len, self.k))


def shard_size_for(payload_len: int, k: int) -> int:
    raw = -(-(payload_len + HEADER) // k)
    return -(-raw // ALIGN) * ALIGN


def encode(config: CodecConfig, payload: bytes) -> list[bytes]:
    return [s.tobytes() for s in encode_arrays(config, payload)]


def encode_arrays(config: CodecConfig, payload: bytes) -> list[np.ndarray]:
    if len(payload) == 0:
        raise ConfigInvalid("payload must be non-empty")
    size = config.shard_size or shard_size_for(len(payload), config.k)
    if size * config.k < len(payload) + HEADER or size % 2:
        raise ConfigInvalid(f"shard_size {size} too small for {len(payload)} bytes over k={config.k}")
    buf = np.zeros(size * config.k, dtype=np.uint8)
    buf[:HEADER] = np.frombuffer(struct.pack("<Q", len(payload)), dtype=np.uint8)
    buf[HEADER : HEADER + len(payload)] = np.frombuffer(payload, dtype=np.uint8)
    data = [buf[i * size : (i + 1) * size] for i in range(config.k)]
    parity = _gf_matmul([list(r) for r in parity_matrix(config.k, config.p)], data)
    return data + parity


def decode(config: CodecConfig, shards: Mapping[int, bytes] | Iterable[tuple[int, bytes]]) -> bytes:
    items = dict(shards.items() if isinstance(shards, Mapping) else shards)
    items = {int(i): s for i, s in items.items() if 0 <= int(i) < config.n}
    if len(items) < config.k:
        raise InsufficientShards(f"need {config.k} distinct shards, got {len(items)}")
    lengths = {len(s) for s in items.values()}
    expected = config.shard_size or next(iter(lengths))
    if lengths != {expected} or expected % 2:
        raise ShardSizeMismatch(f"shards must all be {expected} bytes, got sizes {sorted(lengths)}")
    if all(i in items for i in range(config.k)):
        joined = b"".join(bytes(items[i]) for i in range(config.k))
    else:
        chosen = sorted(items)[: config.k]
        gen = generator_matrix(config.k, config.p)
        inv = mat_inv([gen[i] for i in chosen])
        arrays = [np.frombuffer(bytes(items[i]), dtype=np.uint8) for i in chosen]
        joined = b"".join(a.tobytes() for a in _gf_matmul(inv, arrays))
    (length,) = struct.unpack("<Q", joined[:HEADER])
    if length > len(joined) - HEADER:
        raise ShardSizeMismatch("length header exceeds decoded data; shards are inconsistent")
    return joined[HEADER : HEADER + length]


# grid used by the calibrate command and the shipped calibration table
DEFAULT_BENCH_SIZES = (1_000_000, 10_000_000, 50_000_000)
DEFAULT_BENCH_CONFIGS = tuple(
    (k + p, k) for k in (1, 2, 3, 4, 6, 8, 10, 12) for p in (1, 2, 3, 4) if k + p <= 16
)


def bench(
    sizes: list[int],
    configs: list[tuple[int, int]],
    repeats: int = 5,
    clock: Callable[[], float] = time.perf_counter,
    seed: int = 0,
) -> list[CalibrationSample]:
    """Median-of-`repeats` encode and decode wall times per (size, n, k).

    Decoding drops the first min(p, k) data shards so the matrix path runs.
    """
    rng = np.random.default_rng(seed)
    samples = []
    for size in sizes:
        payload = rng.integers(0, 256, size, dtype=np.uint8).tobytes()
        for n, k in configs:
            cfg = CodecConfig(k, n - k).sized_for(size)
            enc_times, dec_times = [], []
            shards = None
            for _ in range(repeats):
                t0 = clock()
                shards = encode(cfg, payload)
                enc_times.append(clock() - t0)
            drop = min(cfg.p, cfg.k)
            survivors = {i: shards[i] for i in range(drop, cfg.n)}
            for _ in range(repeats):
                t0 = clock()
                out = decode(cfg, survivors)
                dec_times.append(clock() - t0)
            if out != payload:
                raise AssertionError(f"round trip failed for size={size} n={n} k={k}")
            samples.append(CalibrationSample(size, n, k, median(enc_times), median(dec_times)))
    return samples


class FakeClock:
    """Deterministic clock for tests: each reading advances by `tick` seconds."""

    def __init__(self, tick: float = 1e-3):
        self.tick = tick
        self.now = 0.0

    def __call__(self) -> float:
        self.now += self.tick
        return self.now
