"""Lossless reference coders over raw events.

Two built-in baselines Huffman-code the four event fields independently:
``huffman`` symbolizes timestamps as integer microseconds, ``delta-huffman``
first replaces them with first-order differences.  Both are exactly
invertible.  Output uses the same container discipline as the main codec
(magic "EVBAS", per-field canonical tables, trailing CRC-32) so sizes are
directly comparable.

External dictionary coders can be invoked through a subprocess adapter fed
the same integer field streams as planar little-endian int32 data; a
missing tool is reported as skipped, never fatal.
"""

from __future__ import annotations

import shutil
import struct
import subprocess
import zlib
from dataclasses import dataclass

import numpy as np

from .container import ByteReader, SYMBOL_MAX, SYMBOL_MIN
from .errors import ChecksumError, ContainerFormatError
from .events import EventStream
from .huffman import SymbolTable, build_table, decode_symbols, encode_symbols

BASELINE_MAGIC = b"EVBAS"
BASELINE_VERSION = 1

CODER_HUFFMAN = 0
CODER_DELTA_HUFFMAN = 1

EXTERNAL_TOOLS = {
    "zstd": ["zstd", "-q", "-c"],
    "gzip": ["gzip", "-c"],
    "xz": ["xz", "-q", "-c"],
    "lz4": ["lz4", "-q", "-c"],
    "brotli": ["brotli", "-c"],
}


def symbolize(stream: EventStream) -> dict[str, np.ndarray]:
    """Integer field sequences: t as microseconds, x, y, p verbatim."""
    t_us = np.rint(stream.t * 1e6).astype(np.int64)
    if len(t_us) and t_us.max() > SYMBOL_MAX:
        raise ValueError("timestamp exceeds the 32-bit microsecond range")
    return {
        "t": t_us,
        "x": stream.x.astype(np.int64),
        "y": stream.y.astype(np.int64),
        "p": stream.p.astype(np.int64),
    }


def _delta(values: np.ndarray) -> np.ndarray:
    out = values.copy()
    out[1:] = values[1:] - values[:-1]
    return out


def _undelta(deltas: np.ndarray) -> np.ndarray:
    return np.cumsum(deltas)


def _encode_field(values: np.ndarray) -> bytes:
    counts: dict[int, int] = {}
    for v, c in zip(*np.unique(values, return_counts=True)):
        counts[int(v)] = int(c)
    table = build_table(counts)
    payload, n_bits = encode_symbols(values.tolist(), table)
    out = bytearray()
    out += struct.pack("<I", len(table))
    for sym, length in zip(table.symbols, table.code_lengths):
        if not SYMBOL_MIN <= sym <= SYMBOL_MAX:
            raise ValueError(f"field symbol {sym} exceeds the 32-bit width")
        out += struct.pack("<iB", sym, length)
    out += struct.pack("<Q", n_bits)
    out += payload
    return bytes(out)


def _decode_field(rd: ByteReader, count: int) -> np.ndarray:
    n_entries = rd.u32()
    symbols = []
    lengths = []
    for _ in range(n_entries):
        symbols.append(rd.i32())
        lengths.append(rd.u8())
    try:
        table = SymbolTable(tuple(symbols), tuple(lengths))
    except ValueError as exc:
        raise ContainerFormatError(f"invalid field table: {exc}") from None
    n_bits = rd.u64()
    payload = rd.take((n_bits + 7) // 8)
    return np.array(decode_symbols(payload, n_bits, table, count), dtype=np.int64)



def encode_baseline(stream: EventStream, delta: bool = False) -> bytes:
    """Huffman-code the four field sequences into one EVBAS container."""
    if len(stream) == 0:
        raise ValueError("empty stream")
    fields = symbolize(stream)
    if delta:
        fields["t"] = _delta(fields["t"])
    out = bytearray()
    out += BASELINE_MAGIC
    out += struct.pack("<B", BASELINE_VERSION)
    out += struct.pack("<B", CODER_DELTA_HUFFMAN if delta else CODER_HUFFMAN)
    out += struct.pack("<II", stream.sensor_width, stream.sensor_height)
    out += struct.pack("<Q", len(stream))
    for name in ("t", "x", "y", "p"):
        out += _encode_field(fields[name])
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def decode_baseline(data: bytes):
    """Parse an EVBAS container back into its four integer field sequences.

    Returns (fields dict with undeltaed microsecond timestamps, sensor
    width, sensor height).
    """
    if len(data) < 4:
        raise ContainerFormatError("input shorter than a checksum")
    stored = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored:
        raise ChecksumError("baseline container checksum mismatch")
    rd = ByteReader(data[:-4])
    if rd.take(5) != BASELINE_MAGIC:
        raise ContainerFormatError("bad magic, not a baseline container")
    version = rd.u8()
    if version != BASELINE_VERSION:
        raise ContainerFormatError(f"unsupported baseline version {version}")
    coder = rd.u8()
    if coder not in (CODER_HUFFMAN, CODER_DELTA_HUFFMAN):
        raise ContainerFormatError(f"unknown baseline coder tag {coder}")
    width, height = rd.u32(), rd.u32()
    count = rd.u64()
    fields = {name: _decode_field(rd, count) for name in ("t", "x", "y", "p")}
    if rd.pos != len(rd.data):
        raise ContainerFormatError("trailing bytes after baseline payload")
    if coder == CODER_DELTA_HUFFMAN:
        fields["t"] = _undelta(fields["t"])
    return fields, width, height


def huffman_raw(stream: EventStream) -> bytes:
    """Per-field canonical Huffman baseline."""
    return encode_baseline(stream, delta=False)


def delta_huffman(stream: EventStream) -> bytes:
    """Delta-coded timestamps, then per-field Huffman."""
    return encode_baseline(stream, delta=True)


def compressed_size_bits(data: bytes) -> int:
    return len(data) * 8


@dataclass(frozen=True)
class ExternalResult:
    tool: str
    status: str  # "ok" or "skipped"
    compressed_bits: int = 0
    reason: str = ""


def external_field_bytes(stream: EventStream) -> bytes:
    """Planar int32 LE serialization of the four field streams."""
    fields = symbolize(stream)
    parts = [fields[name].astype("<i4").tobytes() for name in ("t", "x", "y", "p")]
    return b"".join(parts)


def external_compress(stream: EventStream, tool: str) -> ExternalResult:
    """Pipe the integer field streams through an external coder, if present."""
    argv = EXTERNAL_TOOLS.get(tool)
    if argv is None:
        raise ValueError(f"unknown external coder {tool!r}; "
                         f"known: {sorted(EXTERNAL_TOOLS)}")
    if shutil.which(argv[0]) is None:
        return ExternalResult(tool, "skipped", reason=f"{argv[0]} not on PATH")
    raw = external_field_bytes(stream)
    proc = subprocess.run(argv, input=raw, stdout=subprocess.PIPE,
                          stderr=subprocess.DEVNULL, check=False)
    if proc.returncode != 0:
        return ExternalResult(tool, "skipped",
                              reason=f"{argv[0]} exited {proc.returncode}")
    return ExternalResult(tool, "ok", compressed_bits=len(proc.stdout) * 8)
