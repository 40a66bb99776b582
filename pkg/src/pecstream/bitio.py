"""Bit-level I/O and small universal codes.

Bits are packed MSB-first within each byte; a final partial byte is
zero-padded on flush, so a blob of n bits occupies ceil(n/8) bytes.
"""

from __future__ import annotations


class TruncatedStreamError(EOFError):
    """A read ran past the end of the available bits."""


#: reverse_byte lookup, REVERSED_BYTES[n] has bit i equal to bit 7-i of n.
REVERSED_BYTES = bytes(
    ((n << 7) & 0x80)
    | ((n << 5) & 0x40)
    | ((n << 3) & 0x20)
    | ((n << 1) & 0x10)
    | ((n >> 1) & 0x08)
    | ((n >> 3) & 0x04)
    | ((n >> 5) & 0x02)
    | ((n >> 7) & 0x01)
    for n in range(256)
)


def reverse_byte(n: int) -> int:
    """Reverse the bit order of an 8-bit value (an involution)."""
    if not 0 <= n <= 255:
        raise ValueError(f"byte out of range: {n}")
    return REVERSED_BYTES[n]


class BitWriter:
    """Accumulates bits MSB-first into a byte buffer."""

    __slots__ = ("_buf", "_acc", "_nbits")

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nbits = 0

    @property
    def bit_length(self) -> int:
        """Total number of bits written so far."""
        return len(self._buf) * 8 + self._nbits

    def write_bit(self, bit: int) -> None:
        acc = (self._acc << 1) | (bit & 1)
        nbits = self._nbits + 1
        if nbits == 8:
            self._buf.append(acc)
            acc = 0
            nbits = 0
        self._acc = acc
        self._nbits = nbits

    def write_bits(self, value: int, count: int) -> None:
        """Write the `count` low bits of `value`, most significant first."""
        if count < 0:
            raise ValueError("bit count must be >= 0")
        acc = (self._acc << count) | (value & ((1 << count) - 1))
        nbits = self._nbits + count
        buf = self._buf
        while nbits >= 8:
            nbits -= 8
            buf.append((acc >> nbits) & 0xFF)
        self._acc = acc & ((1 << nbits) - 1)
        self._nbits = nbits

    def getvalue(self) -> bytes:
        """Return the written bits as bytes, zero-padding the last byte."""
        out = bytes(self._buf)
        if self._nbits:
            out += bytes([(self._acc << (8 - self._nbits)) & 0xFF])
        return out


class BitReader:
    """Reads bits MSB-first from a byte buffer."""

    __slots__ = ("_data", "_nbits", "_pos")

    def __init__(self, data: bytes, bit_count: int | None = None) -> None:
        self._data = data
        self._nbits = 8 * len(data) if bit_count is None else bit_count
        self._pos = 0

    @property
    def bits_consumed(self) -> int:
        return self._pos

    @property
    def bits_remaining(self) -> int:
        return self._nbits - self._pos

    def read_bit(self) -> int:
        pos = self._pos
        if pos >= self._nbits:
            raise TruncatedStreamError("bit source exhausted")
        self._pos = pos + 1
        return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1

    def read_bits(self, count: int) -> int:
        if count < 0:
            raise ValueError("bit count must be >= 0")
        pos = self._pos
        if pos + count > self._nbits:
            raise TruncatedStreamError("bit source exhausted")
        data = self._data
        value = 0
        remaining = count
        while remaining:
            off = pos & 7
            take = 8 - off
            if take > remaining:
                take = remaining
            chunk = (data[pos >> 3] >> (8 - off - take)) & ((1 << take) - 1)
            value = (value << take) | chunk
            pos += take
            remaining -= take
        self._pos = pos
        return value


def pack_bounded(value: int, bound: int, sink: BitWriter) -> int:
    """Bisection-code `value` in [0, bound) and return the bit count.

    Codeword lengths are floor(log2 bound) or ceil(log2 bound) and the
    codeword set for a given bound is prefix-free.
    """
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    if not 0 <= value < bound:
        raise ValueError(f"value {value} outside [0, {bound})")
    a, b, m = 0, bound, bound >> 1
    acc = 0
    nbits = 0
    while a != m:
        if value < m:
            acc = (acc << 1) | 1
            b = m
        else:
            acc <<= 1
            a = m
        m = (a + b) >> 1
        nbits += 1
    sink.write_bits(acc, nbits)
    return nbits


def unpack_bounded(bound: int, source: BitReader) -> int:
    """Inverse of pack_bounded for the same bound."""
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    a, b, m = 0, bound, bound >> 1
    read_bit = source.read_bit
    while a != m:
        if read_bit():
            b = m
        else:
            a = m
        m = (a + b) >> 1
    return m


def elias_gamma_encode(value: int, sink: BitWriter) -> int:
    """Elias-gamma code a positive integer; emits 2*floor(log2 value)+1 bits."""
    if value < 1:
        raise ValueError(f"gamma code requires value >= 1, got {value}")
    width = 2 * value.bit_length() - 1
    sink.write_bits(value, width)
    return width


def elias_gamma_decode(source: BitReader) -> int:
    zeros = 0
    while source.read_bit() == 0:
        zeros += 1
    if zeros == 0:
        return 1
    return (1 << zeros) | source.read_bits(zeros)


def bytes_to_bits(data: bytes) -> bytes:
    """Explode bytes into a sequence of 0/1 values, MSB-first per byte."""
    out = bytearray(len(data) * 8)
    pos = 0
    for byte in data:
        for shift in (7, 6, 5, 4, 3, 2, 1, 0):
            out[pos] = (byte >> shift) & 1
            pos += 1
    return bytes(out)


def bits_to_bytes(bits: bytes) -> bytes:
    """Inverse of bytes_to_bits; the bit count must be a multiple of 8."""
    if len(bits) % 8:
        raise ValueError("bit sequence length must be a multiple of 8")
    out = bytearray(len(bits) // 8)
    pos = 0
    for i in range(len(out)):
        byte = 0
        for _ in range(8):
            byte = (byte << 1) | (bits[pos] & 1)
            pos += 1
        out[i] = byte
    return bytes(out)
