"""Evaluation quantities: compression ratios and reconstruction PSNR.

Two ratios are reported.  The end-to-end ratio divides raw event bits
(64 per tuple) by the full compressed container size.  The input-output
ratio divides uncompressed super-frame bits (16 per count cell) by the
Huffman payload bits alone.  PSNR is computed on normalized frames with
peak 1.0; identical frames report infinity rather than a finite value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .superframe import SuperFrame

BITS_PER_COUNT_CELL = 16


def e2e_cr(raw_bits: int, compressed_bits: int) -> float:
    """Raw event bits over compressed bitstream bits."""
    if compressed_bits <= 0:
        raise ValueError("compressed size must be positive")
    return raw_bits / compressed_bits


def io_cr(input_frame_bits: int, output_bits: int) -> float:
    """Uncompressed super-frame bits over coded latent payload bits."""
    if output_bits <= 0:
        raise ValueError("output size must be positive")
    return input_frame_bits / output_bits


def superframe_bits(frames) -> int:
    """Raw size of super-frames at BITS_PER_COUNT_CELL bits per cell."""
    return sum(f.counts.size * BITS_PER_COUNT_CELL for f in frames)


def _grid(frame) -> np.ndarray:
    if isinstance(frame, SuperFrame):
        return np.asarray(frame.counts, dtype=np.float64)
    return np.asarray(frame, dtype=np.float64)


def mse(original, reconstructed) -> float:
    a, b = _grid(original), _grid(reconstructed)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(original, reconstructed, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE) in dB; math.inf marks identical inputs."""
    if peak <= 0:
        raise ValueError("peak must be positive")
    err = mse(original, reconstructed)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def psnr_global(originals, reconstructions, peak: float = 1.0) -> float:
    """PSNR from the MSE pooled over every cell of every frame pair."""
    if len(originals) != len(reconstructions):
        raise ValueError("frame lists differ in length")
    if not originals:
        raise ValueError("no frames to compare")
    total = 0.0
    cells = 0
    for a, b in zip(originals, reconstructions):
        ga, gb = _grid(a), _grid(b)
        if ga.shape != gb.shape:
            raise ValueError(f"shape mismatch: {ga.shape} vs {gb.shape}")
        total += float(np.sum((ga - gb) ** 2))
        cells += ga.size
    if total == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / (total / cells))


def psnr_frame_mean(originals, reconstructions, peak: float = 1.0) -> float:
    """Mean of the per-frame PSNR values, skipping identical pairs."""
    values = [psnr(a, b, peak) for a, b in zip(originals, reconstructions)]
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return math.inf
    return sum(finite) / len(finite)


@dataclass
class MetricsReport:
    """One evaluation row: sizes, ratios, and reconstruction quality."""

    dt: float
    event_count: int
    raw_bits: int
    compressed_bits: int
    payload_bits: int
    superframe_bits: int
    e2e_cr: float
    io_cr: float
    psnr_db: float
    psnr_db_frame_mean: float
    model_file_bits: int = 0

    def to_text(self) -> str:
        """Line-oriented key=value record."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float):
                lines.append(f"{f.name}={_fmt(value)}")
            else:
                lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.6g}"


CSV_COLUMNS = [f.name for f in fields(MetricsReport)]


def reports_to_csv(reports) -> str:
    """Machine-readable table, one row per report."""
    rows = [",".join(CSV_COLUMNS)]
    for r in reports:
        cells = []
        for name in CSV_COLUMNS:
            value = getattr(r, name)
            cells.append(_fmt(value) if isinstance(value, float) else str(value))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"
