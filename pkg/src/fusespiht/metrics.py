"""Quality and rate metrics: MSE, PSNR, entropy, compression ratio."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeError

PEAK = 255.0
REPORT_FIELDS = ("image", "coder", "budget_bits", "psnr_db", "mse", "cr", "entropy_bits")


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr_from_mse(err: float) -> float:
    if err == 0:
        return math.inf
    return 10.0 * math.log10(PEAK ** 2 / err)


def psnr(a, b) -> float:
    """Peak SNR in dB for 8-bit data; ``math.inf`` when the inputs match."""
    return psnr_from_mse(mse(a, b))


def entropy(values, binning: str = "integer") -> float:
    """Shannon entropy in bits of the empirical symbol distribution.

    ``"integer"`` rounds to the nearest integer; ``"pixel256"`` additionally
    clamps to [0, 255].
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("entropy of an empty sequence")
    v = np.rint(v)
    if binning == "pixel256":
        v = np.clip(v, 0, 255)
    elif binning != "integer":
        raise ValueError(f"unknown binning {binning!r}")
    _, counts = np.unique(v, return_counts=True)
    p = counts / v.size
    return float(-(p * np.log2(p)).sum()) + 0.0


def compression_ratio(original, bs) -> float:
    """Original byte count (one byte per pixel) over total stream bytes."""
    h, w = np.shape(original)
    return (w * h) / bs.total_bytes()


@dataclass
class MetricsReport:
    psnr_db: float
    mse: float
    cr: float
    entropy_bits: float


def report(original, decoded, bs) -> MetricsReport:
    err = mse(original, decoded)
    return MetricsReport(
        psnr_db=psnr_from_mse(err),
        mse=err,
        cr=compression_ratio(original, bs),
        entropy_bits=entropy(np.clip(np.rint(decoded), 0, 255), "pixel256"),
    )


def append_csv(path: str | os.PathLike, rows: list[dict], fields=REPORT_FIELDS) -> None:
    """Append rows to a CSV file, writing the header when the file is new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields))
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in fields})


def _fmt(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return value


def report_row(image: str, coder: str, budget_bits: int, rep: MetricsReport) -> dict:
    return {"image": image, "coder": coder, "budget_bits": budget_bits, **asdict(rep)}
