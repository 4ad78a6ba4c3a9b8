"""Canonical Huffman coding over integer symbol alphabets.

Code lengths come from a min-heap merge with deterministic tie-breaking
(lower combined count first, then lower minimum contained symbol), so
identical inputs always produce identical tables.  Actual codewords are
canonical: assigned in (length, symbol) order, which lets a table be
serialized as (symbol, length) pairs only.  A degenerate one-symbol
alphabet gets a single 1-bit code so the payload stays decodable without
knowing the symbol count.

Bit packing is MSB-first, zero-padded to a byte boundary; the caller
records the unpadded bit length.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import ContainerFormatError


@dataclass(frozen=True)
class SymbolTable:
    """Canonical code table: symbols sorted ascending, one length each."""

    symbols: tuple[int, ...]
    code_lengths: tuple[int, ...]
    _codes: dict = field(init=False, repr=False, compare=False)
    _decode: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.symbols) != len(self.code_lengths):
            raise ValueError("symbols and code_lengths must pair up")
        if list(self.symbols) != sorted(set(self.symbols)):
            raise ValueError("symbols must be sorted and distinct")
        if any(n < 1 for n in self.code_lengths):
            raise ValueError("code lengths must be >= 1")
        object.__setattr__(self, "_codes", _canonical_codes(self.symbols, self.code_lengths))
        object.__setattr__(self, "_decode", _decode_tables(self._codes))

    def __len__(self) -> int:
        return len(self.symbols)

    def code(self, symbol: int) -> tuple[int, int]:
        """(codeword value, bit length) for a symbol in the table."""
        try:
            return self._codes[symbol]
        except KeyError:
            raise KeyError(f"symbol {symbol} not in table") from None

    def codes(self) -> dict[int, tuple[int, int]]:
        return dict(self._codes)


def _canonical_codes(symbols, lengths) -> dict[int, tuple[int, int]]:
    order = sorted(zip(lengths, symbols))
    codes: dict[int, tuple[int, int]] = {}
    value = 0
    prev_len = 0
    for length, sym in order:
        value <<= length - prev_len
        prev_len = length
        codes[sym] = (value, length)
        value += 1
    if prev_len and value > (1 << prev_len):
        raise ValueError("code lengths violate the Kraft inequality")
    return codes


def _decode_tables(codes: dict[int, tuple[int, int]]):
    """Per-length (first_code, [symbols in canonical order]) lookup."""
    by_len: dict[int, list[tuple[int, int]]] = {}
    for sym, (value, length) in codes.items():
        by_len.setdefault(length, []).append((value, sym))
    tables = {}
    for length, entries in by_len.items():
        entries.sort()
        first = entries[0][0]
        tables[length] = (first, [sym for _, sym in entries])
    return tables


def build_table(frequencies: dict[int, int]) -> SymbolTable:
    """Huffman code lengths for a symbol->count map, as a canonical table."""
    counts = {int(s): int(c) for s, c in frequencies.items() if c > 0}
    if any(c < 0 for c in frequencies.values()):
        raise ValueError("negative symbol count")
    if not counts:
        raise ValueError("at least one symbol must have a positive count")
    if len(counts) == 1:
        (sym,) = counts
        return SymbolTable((sym,), (1,))
    # heap items: (combined count, min contained symbol, leaf symbols).
    # Min symbols are distinct across disjoint merges, so ordering is total.
    heap: list[tuple[int, int, list[int]]] = [
        (c, s, [s]) for s, c in counts.items()
    ]
    heapq.heapify(heap)
    depth = {s: 0 for s in counts}
    while len(heap) > 1:
        c1, m1, leaves1 = heapq.heappop(heap)
        c2, m2, leaves2 = heapq.heappop(heap)
        for s in leaves1:
            depth[s] += 1
        for s in leaves2:
            depth[s] += 1
        leaves1.extend(leaves2)
        heapq.heappush(heap, (c1 + c2, min(m1, m2), leaves1))
    symbols = tuple(sorted(counts))
    return SymbolTable(symbols, tuple(depth[s] for s in symbols))


def encode_symbols(symbols, table: SymbolTable) -> tuple[bytes, int]:
    """Concatenate codewords MSB-first; returns (payload, unpadded bit count)."""
    codes = table._codes
    acc = 0
    acc_bits = 0
    total_bits = 0
    out = bytearray()
    for sym in symbols:
        try:
            value, length = codes[sym]
        except KeyError:
            raise ValueError(f"symbol {sym} absent from table") from None
        acc = (acc << length) | value
        acc_bits += length
        total_bits += length
        while acc_bits >= 8:
            acc_bits -= 8
            out.append((acc >> acc_bits) & 0xFF)
        acc &= (1 << acc_bits) - 1
    if acc_bits:
        out.append((acc << (8 - acc_bits)) & 0xFF)
    return bytes(out), total_bits


def decode_symbols(data: bytes, n_bits: int, table: SymbolTable, count: int) -> list[int]:
    """Decode exactly ``count`` symbols, consuming all ``n_bits`` payload bits."""
    if n_bits > len(data) * 8:
        raise ContainerFormatError("payload shorter than its declared bit length")
    tables = table._decode
    max_len = max(tables) if tables else 0
    out: list[int] = []
    pos = 0
    for _ in range(count):
        value = 0
        length = 0
        while True:
            if pos >= n_bits:
                raise ContainerFormatError("bits exhausted before all symbols decoded")
            bit = (data[pos >> 3] >> (7 - (pos & 7))) & 1
            value = (value << 1) | bit
            length += 1
            pos += 1
            entry = tables.get(length)
            if entry is not None:
                first, syms = entry
                idx = value - first
                if 0 <= idx < len(syms):
                    out.append(syms[idx])
                    break
            if length > max_len:
                raise ContainerFormatError("invalid prefix in payload")
    if pos != n_bits:
        raise ContainerFormatError(
            f"{n_bits - pos} unconsumed non-padding bits after decoding")
    return out
