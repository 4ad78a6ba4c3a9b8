"""Reading, writing, and size accounting for raw event-camera streams.

The on-disk format is plain text, one event per line, four whitespace
separated fields ``t x y p`` with the timestamp in seconds.  Lines starting
with ``#`` are comments.  Each raw tuple is accounted as 64 bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EventFormatError

RAW_BITS_PER_EVENT = 64


@dataclass(frozen=True)
class Event:
    """One address-event tuple: time (s), column, row, polarity bit."""

    t: float
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class EventStream:
    """Chronologically ordered events plus the sensor geometry.

    Arrays are column-wise: ``t`` is float64 seconds, ``x``/``y``/``p`` are
    integer pixel coordinates and polarity bits.  Instances are immutable
    and safe to share across workers.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    sensor_width: int
    sensor_height: int

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.int64)
        if not (len(t) == len(x) == len(y) == len(p)):
            raise ValueError("field arrays must have equal length")
        if self.sensor_width <= 0 or self.sensor_height <= 0:
            raise ValueError("sensor dimensions must be positive")
        if len(t):
            if t[0] < 0:
                raise ValueError("timestamps must be non-negative")
            if np.any(np.diff(t) < 0):
                raise ValueError("timestamps must be non-decreasing")
            if x.min() < 0 or x.max() >= self.sensor_width:
                raise ValueError("x coordinate out of sensor bounds")
            if y.min() < 0 or y.max() >= self.sensor_height:
                raise ValueError("y coordinate out of sensor bounds")
            if not np.isin(p, (0, 1)).all():
                raise ValueError("polarity must be 0 or 1")
        for name, arr in (("t", t), ("x", x), ("y", y), ("p", p)):
            object.__setattr__(self, name, _readonly(arr))

    def __len__(self) -> int:
        return len(self.t)

    def event(self, i: int) -> Event:
        return Event(float(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.event(i)

    def first_seconds(self, span: float) -> "EventStream":
        """Events within ``span`` seconds of the first event (inclusive start)."""
        if len(self) == 0 or span <= 0:
            return EventStream(self.t[:0], self.x[:0], self.y[:0], self.p[:0],
                               self.sensor_width, self.sensor_height)
        limit = self.t[0] + span
        n = int(np.searchsorted(self.t, limit, side="left"))
        return EventStream(self.t[:n].copy(), self.x[:n].copy(), self.y[:n].copy(),
                           self.p[:n].copy(), self.sensor_width, self.sensor_height)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def parse_events(text: str, sensor_width: int, sensor_height: int) -> EventStream:
    """Parse ``t x y p`` lines into an EventStream, validating as it goes.

    Raises EventFormatError with the offending line number for malformed
    lines, out-of-bounds coordinates, bad polarity, or decreasing timestamps.
    """
    ts: list[float] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    prev_t = -1.0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 4:
            raise EventFormatError(
                f"expected 4 fields, got {len(fields)} at line {lineno}")
        try:
            t = float(fields[0])
            x = int(fields[1])
            y = int(fields[2])
            p = int(fields[3])
        except ValueError as exc:
            raise EventFormatError(f"unparseable field at line {lineno}: {exc}") from None
        if not np.isfinite(t) or t < 0:
            raise EventFormatError(f"negative or non-finite timestamp at line {lineno}")
        if t < prev_t:
            raise EventFormatError(f"decreasing timestamp at line {lineno}")
        if not 0 <= x < sensor_width:
            raise EventFormatError(f"x={x} out of bounds at line {lineno}")
        if not 0 <= y < sensor_height:
            raise EventFormatError(f"y={y} out of bounds at line {lineno}")
        if p not in (0, 1):
            raise EventFormatError(f"polarity {p} not in {{0,1}} at line {lineno}")
        prev_t = t
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)
    return EventStream(np.array(ts, dtype=np.float64), np.array(xs, dtype=np.int64),
                       np.array(ys, dtype=np.int64), np.array(ps, dtype=np.int64),
                       sensor_width, sensor_height)


def format_events(stream: EventStream) -> str:
    """Serialize a stream back to the text format (9 decimal places on t)."""
    lines = [
        f"{t:.9f} {x} {y} {p}"
        for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.p)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def load_events(path: str | Path, sensor_width: int, sensor_height: int) -> EventStream:
    return parse_events(Path(path).read_text(), sensor_width, sensor_height)


def save_events(path: str | Path, stream: EventStream) -> None:
    Path(path).write_text(format_events(stream))


def raw_size_bits(stream: EventStream) -> int:
    """Uncompressed size of the stream at 64 bits per event tuple."""
    return RAW_BITS_PER_EVENT * len(stream)
