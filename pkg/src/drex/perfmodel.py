"""Encode/decode time regression and parallel transfer times."""

from __future__ import annotations

import csv
import functools
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from drex.errors import EmptyMapping, InputError, RankDeficient

CSV_HEADER = ["size_bytes", "n", "k", "encode_s", "decode_s"]


@dataclass(frozen=True)
class CalibrationSample:
    item_size: int
    n: int
    k: int
    encode_time: float
    decode_time: float

    def __post_init__(self):
        if self.item_size <= 0 or self.n <= 0 or self.k <= 0:
            raise ValueError("calibration sample fields must be positive")
        if self.encode_time <= 0 or self.decode_time <= 0:
            raise ValueError("calibration timings must be positive")
        if self.k >= self.n:
            raise ValueError("calibration sample needs k < n")


@dataclass(frozen=True)
class TimeModel:
    """Linear model over features [1, item_size, n, k]; predictions clamp at zero."""

    encode_coeffs: tuple[float, float, float, float]
    decode_coeffs: tuple[float, float, float, float]

    @classmethod
    def zero(cls) -> TimeModel:
        return cls((0.0,) * 4, (0.0,) * 4)

    def predict_encode(self, item_size: float, n: int, k: int) -> float:
        c = self.encode_coeffs
        return max(0.0, c[0] + c[1] * item_size + c[2] * n + c[3] * k)

    def predict_decode(self, item_size: float, k: int) -> float:
        c = self.decode_coeffs
        return max(0.0, c[0] + c[1] * item_size + c[2] * k + c[3] * k)

    def encode_array(self, item_size: float, n: np.ndarray, k: np.ndarray) -> np.ndarray:
        c = self.encode_coeffs
        return np.maximum(0.0, c[0] + c[1] * item_size + c[2] * n + c[3] * k)

    def decode_array(self, item_size: float, k: np.ndarray) -> np.ndarray:
        c = self.decode_coeffs
        return np.maximum(0.0, c[0] + c[1] * item_size + c[2] * k + c[3] * k)


def _design(samples) -> np.ndarray:
    return np.array([[1.0, s.item_size, s.n, s.k] for s in samples], dtype=np.float64)


def fit(samples: list[CalibrationSample]) -> TimeModel:
    if len(samples) < 4:
        raise RankDeficient(f"need at least 4 samples, got {len(samples)}")
    x = _design(samples)
    # column scaling keeps the normal equations well conditioned (sizes ~1e8, counts ~1e1)
    scale = np.abs(x).max(axis=0)
    xs = x / scale
    if np.linalg.matrix_rank(xs) < 4:
        raise RankDeficient("calibration design matrix is singular")
    out = []
    for attr in ("encode_time", "decode_time"):
        y = np.array([getattr(s, attr) for s in samples], dtype=np.float64)
        beta, *_ = np.linalg.lstsq(xs, y, rcond=None)
        out.append(tuple(float(b) for b in beta / scale))
    return TimeModel(out[0], out[1])


def predict_encode(model: TimeModel, item_size: float, n: int, k: int) -> float:
    return model.predict_encode(item_size, n, k)


def predict_decode(model: TimeModel, item_size: float, k: int) -> float:
    return model.predict_decode(item_size, k)


def transfer_time(chunk_size: float, nodes, direction: str) -> float:
    """Fully parallel transfer of one chunk per node; the slowest node bounds it."""
    if not nodes:
        raise EmptyMapping("transfer over an empty mapping")
    if direction == "write":
        bw = min(n.write_bw for n in nodes)
    elif direction == "read":
        bw = min(n.read_bw for n in nodes)
    else:
        raise ValueError(f"direction must be 'read' or 'write', got {direction!r}")
    return chunk_size / bw


def write_calibration_csv(samples, path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in samples:
            w.writerow([s.item_size, s.n, s.k, repr(float(s.encode_time)), repr(float(s.decode_time))])
    finally:
        if own:
            fh.close()


def read_calibration_csv(path_or_text) -> list[CalibrationSample]:
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = path_or_text
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise InputError(f"calibration CSV must start with header {','.join(CSV_HEADER)}")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            size, n, k, enc, dec = row
            samples.append(CalibrationSample(int(size), int(n), int(k), float(enc), float(dec)))
        except (ValueError, TypeError) as exc:
            raise InputError(f"calibration CSV line {lineno}: {exc}") from exc
    return samples


def default_samples() -> list[CalibrationSample]:
    text = resources.files("drex.data").joinpath("calibration.csv").read_text(encoding="utf-8")
    return read_calibration_csv(text)


@functools.lru_cache(maxsize=1)
def default_model() -> TimeModel:
    return fit(default_samples())
