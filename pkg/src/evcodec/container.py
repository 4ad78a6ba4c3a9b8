"""Bit-exact container for compressed event streams.

Wire format (all integers little-endian, floats IEEE-754 binary64 LE):

    [5B]  magic "EVCMP"
    [1B]  version (currently 1)
    [u32] sensor_width        [u32] sensor_height
    [f64] dt (seconds)        [f64] t0 (first window start, seconds)
    [u32] frame_count
    [u32] block_rows          [u32] block_cols
    [u16] code_size (latent symbols per block)
    [f64] normalizer scale    [f64] quantization scale
    [u32] table entries, then per entry: [i32] symbol, [u8] code length
    [u64] symbol count        [u64] payload bit length
    [...] payload bytes (ceil(bits / 8))
    [u32] CRC-32 over everything above

The symbol count must equal frame_count * block_rows * block_cols *
code_size; readers reject containers where the two disagree.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import ChecksumError, ContainerFormatError
from .huffman import SymbolTable

MAGIC = b"EVCMP"
VERSION = 1
SYMBOL_MIN = -(2**31)
SYMBOL_MAX = 2**31 - 1


class ByteReader:
    """Sequential struct reader that raises on truncation."""

    def __init__(self, data: bytes, error=ContainerFormatError):
        self.data = data
        self.pos = 0
        self._error = error

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise self._error("truncated input")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def u8(self) -> int:
        return self.unpack("B")[0]

    def u16(self) -> int:
        return self.unpack("H")[0]

    def u32(self) -> int:
        return self.unpack("I")[0]

    def u64(self) -> int:
        return self.unpack("Q")[0]

    def i32(self) -> int:
        return self.unpack("i")[0]

    def f64(self) -> float:
        return self.unpack("d")[0]


@dataclass(frozen=True)
class CompressedStream:
    """Parsed container: header fields plus the Huffman payload."""

    sensor_width: int
    sensor_height: int
    dt: float
    t0: float
    frame_count: int
    block_rows: int
    block_cols: int
    code_size: int
    norm_scale: float
    quant_scale: float
    table: SymbolTable | None
    n_symbols: int
    payload: bytes
    payload_bits: int

    def __post_init__(self):
        expected = (self.frame_count * self.block_rows * self.block_cols
                    * self.code_size)
        if self.n_symbols != expected:
            raise ContainerFormatError(
                f"symbol count {self.n_symbols} does not match the block grid "
                f"({expected})")
        if self.n_symbols > 0 and self.table is None:
            raise ContainerFormatError("non-empty payload requires a symbol table")
        if len(self.payload) != (self.payload_bits + 7) // 8:
            raise ContainerFormatError("payload byte length disagrees with bit length")


def write_stream(cs: CompressedStream) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<B", VERSION)
    out += struct.pack("<II", cs.sensor_width, cs.sensor_height)
    out += struct.pack("<dd", cs.dt, cs.t0)
    out += struct.pack("<III", cs.frame_count, cs.block_rows, cs.block_cols)
    out += struct.pack("<H", cs.code_size)
    out += struct.pack("<dd", cs.norm_scale, cs.quant_scale)
    entries = [] if cs.table is None else list(zip(cs.table.symbols, cs.table.code_lengths))
    out += struct.pack("<I", len(entries))
    for sym, length in entries:
        if not SYMBOL_MIN <= sym <= SYMBOL_MAX:
            raise ContainerFormatError(f"symbol {sym} exceeds the 32-bit symbol width")
        out += struct.pack("<iB", sym, length)
    out += struct.pack("<QQ", cs.n_symbols, cs.payload_bits)
    out += cs.payload
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def read_stream(data: bytes) -> CompressedStream:
    if len(data) < 4:
        raise ContainerFormatError("input shorter than a checksum")
    stored = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored:
        raise ChecksumError("container checksum mismatch")
    rd = ByteReader(data[:-4])
    if rd.take(5) != MAGIC:
        raise ContainerFormatError("bad magic, not a compressed event stream")
    version = rd.u8()
    if version != VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    sensor_width, sensor_height = rd.u32(), rd.u32()
    dt, t0 = rd.f64(), rd.f64()
    frame_count, block_rows, block_cols = rd.u32(), rd.u32(), rd.u32()
    code_size = rd.u16()
    norm_scale, quant_scale = rd.f64(), rd.f64()
    n_entries = rd.u32()
    symbols = []
    lengths = []
    for _ in range(n_entries):
        symbols.append(rd.i32())
        lengths.append(rd.u8())
    try:
        table = SymbolTable(tuple(symbols), tuple(lengths)) if n_entries else None
    except ValueError as exc:
        raise ContainerFormatError(f"invalid symbol table: {exc}") from None
    n_symbols = rd.u64()
    payload_bits = rd.u64()
    payload = rd.take((payload_bits + 7) // 8)
    if rd.pos != len(rd.data):
        raise ContainerFormatError("trailing bytes after payload")
    return CompressedStream(sensor_width, sensor_height, dt, t0, frame_count,
                            block_rows, block_cols, code_size, norm_scale,
                            quant_scale, table, n_symbols, payload, payload_bits)
