"""Binary PGM (P5) input/output and size normalisation.

Images are plain 2D numpy arrays of shape ``(height, width)``. ``load_pgm``
returns ``uint8``; processing code promotes to ``float64`` as needed and
``save_pgm`` rounds and clamps back to ``[0, 255]``.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import IoError, ParseError, ShapeError, UnsupportedFormat

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    m = _TOKEN.match(data, pos)
    if m is None:
        raise ParseError("unexpected end of PGM header")
    return m.group(1), m.end()


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode the bytes of a P5 file into a ``(height, width)`` uint8 array."""
    if len(data) < 2:
        raise ParseError("file too short for a PGM header")
    magic = data[:2]
    if magic != b"P5":
        if magic[:1] == b"P" and magic[1:2] in b"1234567":
            raise UnsupportedFormat(f"netpbm variant {magic.decode()} is not supported, only P5")
        raise ParseError("missing P5 magic")

    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _next_token(data, pos)
        if not tok.isdigit():
            raise ParseError(f"bad {name} field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ParseError("image dimensions must be positive")
    if maxval <= 0:
        raise ParseError("maxval must be positive")
    if maxval > 255:
        raise UnsupportedFormat(f"maxval {maxval} > 255 (16-bit PGM) is not supported")
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n":
        raise ParseError("missing whitespace byte after maxval")
    pos += 1

    n = width * height
    payload = data[pos:pos + n]
    if len(payload) < n:
        raise ParseError(f"truncated payload: expected {n} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def load_pgm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def to_pgm_bytes(img: np.ndarray) -> bytes:
    """Serialise ``img`` with the canonical ``P5\\n<w> <h>\\n255\\n`` header.

    Values are rounded to the nearest integer and clamped to [0, 255]; this
    is the only place where clamping happens.
    """
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise ShapeError(f"expected a non-empty 2D image, got shape {img.shape}")
    height, width = img.shape
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img.astype(np.float64)), 0, 255).astype(np.uint8)
    return b"P5\n%d %d\n255\n" % (width, height) + img.tobytes()


def save_pgm(img: np.ndarray, path: str | os.PathLike) -> None:
    data = to_pgm_bytes(img)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def crop_to_common(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Crop both images to their common top-left region."""
    if a.size == 0 or b.size == 0:
        raise ShapeError("cannot crop an empty image")
    h = min(a.shape[0], b.shape[0])
    w = min(a.shape[1], b.shape[1])
    return a[:h, :w], b[:h, :w]
