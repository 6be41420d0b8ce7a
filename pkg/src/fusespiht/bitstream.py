"""RMS1 container: fixed header, optional RLE mask, MSB-first bit payload.

Layout (all multi-byte integers big-endian)::

    "RMS1"                      4 bytes
    flags                       u8   bit0 transform (0 int, 1 float)
                                     bit1 coder (0 SPIHT, 1 RE-MSPIHT)
                                     bit2 mask present
                                     bit3 all-zero pyramid
    width, height               u16, u16
    levels, P, scale_shift      u8, u8, u8
    q_num, q_den                u16, u16
    [mask_len u32, mask bytes]  only when bit2 is set
    payload_bit_count           u32
    payload                     ceil(bit_count / 8) bytes, zero padded

The mask is a run-length code over the row-major coefficient grid: LEB128
varints giving alternating zero-run / one-run lengths, starting with a
(possibly empty) zero-run.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import FormatError, TruncationError
from .wavelet import Mode

MAGIC = b"RMS1"
FLAG_FLOAT = 0x01
FLAG_REMSPIHT = 0x02
FLAG_MASK = 0x04
FLAG_ALL_ZERO = 0x08
_KNOWN_FLAGS = FLAG_FLOAT | FLAG_REMSPIHT | FLAG_MASK | FLAG_ALL_ZERO

_HEAD = struct.Struct(">4sBHHBBBHH")
_U32 = struct.Struct(">I")


def leb128_encode(value: int) -> bytes:
    if value < 0:
        raise ValueError("LEB128 values must be non-negative")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def leb128_decode(data: bytes, pos: int) -> tuple[int, int]:
    value = shift = 0
    while True:
        if pos >= len(data):
            raise FormatError("truncated LEB128 varint")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            return value, pos


def mask_to_rle(mask: np.ndarray) -> bytes:
    flat = np.asarray(mask, dtype=bool).ravel()
    # run boundaries, with a leading zero-run forced by prepending False
    padded = np.concatenate([[False], flat])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    bounds = np.concatenate([[0], edges, [flat.size]])
    runs = np.diff(bounds)
    return b"".join(leb128_encode(int(r)) for r in runs)


def rle_to_mask(data: bytes, shape: tuple[int, int]) -> np.ndarray:
    total = shape[0] * shape[1]
    flat = np.zeros(total, dtype=bool)
    pos = filled = 0
    value = False
    while pos < len(data):
        run, pos = leb128_decode(data, pos)
        if filled + run > total:
            raise FormatError("mask runs overflow the coefficient grid")
        if value:
            flat[filled:filled + run] = True
        filled += run
        value = not value
    if filled != total:
        raise FormatError(f"mask runs cover {filled} of {total} coefficients")
    return flat.reshape(shape)


def pack_bits(bits) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8)
    return np.packbits(arr).tobytes() if arr.size else b""


def unpack_bits(payload: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=count)


@dataclass(frozen=True)
class SpihtBitstream:
    width: int
    height: int
    levels: int
    mode: Mode
    P: int
    payload: bytes
    bit_count: int
    remspiht: bool = False
    all_zero: bool = False
    scale_shift: int = 0
    quant_step: Fraction = Fraction(1)
    mask: np.ndarray | None = field(default=None, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def flags(self) -> int:
        flags = 0
        if self.mode == Mode.FLOAT:
            flags |= FLAG_FLOAT
        if self.remspiht:
            flags |= FLAG_REMSPIHT
        if self.mask is not None:
            flags |= FLAG_MASK
        if self.all_zero:
            flags |= FLAG_ALL_ZERO
        return flags

    def header_bytes(self) -> bytes:
        q = Fraction(self.quant_step)
        head = _HEAD.pack(MAGIC, self.flags, self.width, self.height, self.levels,
                          self.P, self.scale_shift, q.numerator, q.denominator)
        if self.mask is not None:
            rle = mask_to_rle(self.mask)
            head += _U32.pack(len(rle)) + rle
        return head + _U32.pack(self.bit_count)

    def to_bytes(self) -> bytes:
        return self.header_bytes() + self.payload[: (self.bit_count + 7) // 8]

    def bits(self) -> np.ndarray:
        return unpack_bits(self.payload, self.bit_count)

    def total_bytes(self) -> int:
        return len(self.to_bytes())

    def truncated(self, nbits: int) -> "SpihtBitstream":
        """The same stream cut to its first ``nbits`` payload bits."""
        nbits = max(0, min(nbits, self.bit_count))
        return SpihtBitstream(
            self.width, self.height, self.levels, self.mode, self.P,
            pack_bits(self.bits()[:nbits]), nbits, self.remspiht, self.all_zero,
            self.scale_shift, self.quant_step, self.mask,
        )


def header_size(mask: np.ndarray | None = None) -> int:
    """Byte length of the header that would precede the payload."""
    size = _HEAD.size + _U32.size
    if mask is not None:
        size += _U32.size + len(mask_to_rle(mask))
    return size


def from_bytes(data: bytes, allow_truncated: bool = False) -> SpihtBitstream:
    """Parse an RMS1 stream.

    A payload shorter than the announced bit count raises TruncationError,
    unless ``allow_truncated`` is set, in which case the bit count is cut to
    the bits actually present.
    """
    if len(data) < _HEAD.size:
        raise FormatError("stream shorter than the fixed header")
    magic, flags, width, height, levels, P, shift, qn, qd = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if flags & ~_KNOWN_FLAGS:
        raise FormatError(f"unknown flag bits 0x{flags:02x}")
    if flags & FLAG_REMSPIHT and not flags & FLAG_MASK:
        raise FormatError("RE-MSPIHT stream without a mask section")
    if qd == 0 or qn == 0:
        raise FormatError("quantisation step must be non-zero")
    pos = _HEAD.size
    mask = None
    if flags & FLAG_MASK:
        if len(data) < pos + 4:
            raise FormatError("truncated mask length")
        (mlen,) = _U32.unpack_from(data, pos)
        pos += 4
        if len(data) < pos + mlen:
            raise FormatError("truncated mask section")
        mask = rle_to_mask(data[pos:pos + mlen], (height, width))
        pos += mlen
    if len(data) < pos + 4:
        raise FormatError("missing payload bit count")
    (bit_count,) = _U32.unpack_from(data, pos)
    pos += 4
    payload = data[pos:]
    available = 8 * len(payload)
    if available < bit_count:
        if not allow_truncated:
            raise TruncationError(f"payload holds {available} bits, header announces {bit_count}")
        bit_count = available
    return SpihtBitstream(
        width=width, height=height, levels=levels,
        mode=Mode.FLOAT if flags & FLAG_FLOAT else Mode.INTEGER,
        P=P, payload=bytes(payload[: (bit_count + 7) // 8]), bit_count=bit_count,
        remspiht=bool(flags & FLAG_REMSPIHT), all_zero=bool(flags & FLAG_ALL_ZERO),
        scale_shift=shift, quant_step=Fraction(qn, qd), mask=mask,
    )
