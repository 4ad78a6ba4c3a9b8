"""Time aggregation of events into polarity-split super-frames and 30x30 blocks.

A super-frame for window ``k`` is a count histogram over ``[t0 + k*dt,
t0 + (k+1)*dt)`` where ``t0`` is the first event's timestamp.  Polarity-0
counts occupy the left half of the grid, polarity-1 counts the right half,
so an ``H x W`` sensor yields an ``H x 2W`` frame.  Frames are zero-padded
to multiples of the block edge and tiled in raster order for the encoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import EventStream

BLOCK_SIZE = 30


@dataclass(frozen=True)
class SuperFrame:
    """Count grid for one aggregation window (left half p=0, right half p=1)."""

    window_index: int
    t_start: float
    dt: float
    counts: np.ndarray  # (sensor_height, 2 * sensor_width) non-negative ints

    @property
    def sensor_height(self) -> int:
        return self.counts.shape[0]

    @property
    def sensor_width(self) -> int:
        return self.counts.shape[1] // 2


@dataclass(frozen=True)
class Normalizer:
    """Count value that maps to 1.0; counts above it saturate."""

    scale: float

    def __post_init__(self):
        if not (self.scale >= 1):
            raise ValueError("normalizer scale must be >= 1")


@dataclass(frozen=True)
class Block:
    """One normalized BLOCK_SIZE x BLOCK_SIZE patch of a super-frame."""

    frame_index: int
    origin_row: int
    origin_col: int
    values: np.ndarray  # (BLOCK_SIZE, BLOCK_SIZE) floats in [0, 1]


def aggregate(stream: EventStream, dt: float) -> list[SuperFrame]:
    """Histogram events into consecutive windows of width dt seconds.

    Windows are anchored at the first event's timestamp; the trailing
    partial window is emitted.  Every window between the first and the
    last event is present, including empty ones.
    """
    if dt <= 0:
        raise ValueError("aggregation window dt must be positive")
    h, w = stream.sensor_height, stream.sensor_width
    if len(stream) == 0:
        return []
    t0 = float(stream.t[0])
    rel = stream.t - t0
    k = np.floor(rel / dt).astype(np.int64)
    # one-ulp fixups so boundary events land in [k*dt, (k+1)*dt)
    k += rel >= (k + 1) * dt
    k -= rel < k * dt
    n_windows = int(k[-1]) + 1
    # events are time sorted, so each window is a contiguous slice
    bounds = np.searchsorted(k, np.arange(n_windows + 1))
    cell = stream.y * (2 * w) + stream.p * w + stream.x
    frames = []
    for win in range(n_windows):
        lo, hi = bounds[win], bounds[win + 1]
        counts = np.bincount(cell[lo:hi], minlength=h * 2 * w).reshape(h, 2 * w)
        frames.append(SuperFrame(win, t0 + win * dt, dt, counts))
    return frames


def fit_normalizer(frames: list[SuperFrame]) -> Normalizer:
    """Scale = max count observed anywhere across the frames, floored at 1."""
    if not frames:
        raise ValueError("cannot fit a normalizer on zero frames")
    peak = max(int(f.counts.max()) for f in frames)
    return Normalizer(scale=float(max(peak, 1)))


def padded_shape(sensor_width: int, sensor_height: int) -> tuple[int, int]:
    rows = math.ceil(sensor_height / BLOCK_SIZE) * BLOCK_SIZE
    cols = math.ceil(2 * sensor_width / BLOCK_SIZE) * BLOCK_SIZE
    return rows, cols


def block_grid(sensor_width: int, sensor_height: int) -> tuple[int, int]:
    """(rows, cols) of the block tiling for one super-frame."""
    rows, cols = padded_shape(sensor_width, sensor_height)
    return rows // BLOCK_SIZE, cols // BLOCK_SIZE


def to_blocks(frame: SuperFrame, norm: Normalizer) -> list[Block]:
    """Zero-pad to block multiples and tile in raster order.

    Cell values are min(count, scale) / scale so they always land in [0, 1].
    """
    scale = norm.scale
    h, w2 = frame.counts.shape
    rows, cols = padded_shape(w2 // 2, h)
    padded = np.zeros((rows, cols), dtype=np.float64)
    padded[:h, :w2] = np.minimum(frame.counts, scale) / scale
    blocks = []
    for r in range(0, rows, BLOCK_SIZE):
        for c in range(0, cols, BLOCK_SIZE):
            blocks.append(Block(frame.window_index, r, c,
                                padded[r:r + BLOCK_SIZE, c:c + BLOCK_SIZE].copy()))
    return blocks


def from_blocks(blocks: list[Block], sensor_width: int, sensor_height: int,
                norm: Normalizer, window_index: int = 0, t_start: float = 0.0,
                dt: float = 0.0) -> SuperFrame:
    """Reassemble a super-frame from blocks covering the padded grid once.

    Counts are round(value * scale); padding rows/columns are discarded.
    """
    rows, cols = padded_shape(sensor_width, sensor_height)
    expected = {(r, c) for r in range(0, rows, BLOCK_SIZE)
                for c in range(0, cols, BLOCK_SIZE)}
    seen = set()
    padded = np.zeros((rows, cols), dtype=np.float64)
    for blk in blocks:
        origin = (blk.origin_row, blk.origin_col)
        if origin in seen:
            raise ValueError(f"overlapping block origin {origin}")
        if origin not in expected:
            raise ValueError(f"block origin {origin} outside the padded grid")
        seen.add(origin)
        padded[origin[0]:origin[0] + BLOCK_SIZE,
               origin[1]:origin[1] + BLOCK_SIZE] = blk.values
    if seen != expected:
        missing = sorted(expected - seen)
        raise ValueError(f"missing block origins: {missing[:4]}")
    counts = np.rint(padded * norm.scale).astype(np.int64)
    return SuperFrame(window_index, t_start, dt,
                      counts[:sensor_height, :2 * sensor_width])


def blocks_to_matrix(blocks: list[Block]) -> np.ndarray:
    """Stack block values as rows of an (n_blocks, BLOCK_SIZE**2) matrix."""
    if not blocks:
        return np.zeros((0, BLOCK_SIZE * BLOCK_SIZE))
    return np.stack([b.values.reshape(-1) for b in blocks])
