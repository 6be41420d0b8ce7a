"""Separable 2D Haar transform in the nested (Mallat) quadrant layout.

Two flavours are provided:

* ``Mode.INTEGER`` -- the S-transform, ``s = floor((a + b) / 2)``,
  ``d = a - b``. Integer in, integer out, exactly invertible.
* ``Mode.FLOAT`` -- the orthonormal pair ``((a + b)/sqrt2, (a - b)/sqrt2)``.

Each level filters rows first, then columns, and recurses on the LL
quadrant. After ``levels`` steps the grid holds LL in the top-left corner and,
for each level ``l``, HL (upper right), LH (lower left) and HH (lower right)
of size ``(h / 2**l, w / 2**l)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

SQRT2 = np.sqrt(2.0)


class Mode(enum.IntEnum):
    INTEGER = 0
    FLOAT = 1

    @classmethod
    def parse(cls, value: "Mode | str | int") -> "Mode":
        if isinstance(value, Mode):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("int", "integer", "integerlifting", "lifting"):
                return cls.INTEGER
            if key in ("float", "orthonormal", "orthonormalfloat"):
                return cls.FLOAT
            raise ValueError(f"unknown transform mode {value!r}")
        return cls(value)


@dataclass(frozen=True)
class WaveletPyramid:
    coeffs: np.ndarray
    levels: int
    mode: Mode

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64)
        check_shape(coeffs.shape, self.levels)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "mode", Mode.parse(self.mode))

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    def ll_shape(self) -> tuple[int, int]:
        return self.height >> self.levels, self.width >> self.levels

    def replace(self, coeffs: np.ndarray) -> "WaveletPyramid":
        return WaveletPyramid(coeffs, self.levels, self.mode)


def check_shape(shape: tuple[int, ...], levels: int) -> None:
    """Raise ShapeError unless both sides are divisible by ``2**(levels+1)``.

    The extra factor of two keeps the LL band tiled by whole 2x2 groups,
    which the tree coder relies on.
    """
    if len(shape) != 2:
        raise ShapeError(f"expected a 2D grid, got shape {shape}")
    if levels < 1:
        raise ShapeError(f"levels must be >= 1, got {levels}")
    block = 1 << (levels + 1)
    h, w = shape
    if h <= 0 or w <= 0 or h % block or w % block:
        raise ShapeError(
            f"{w}x{h} grid is not divisible by 2**(levels+1) = {block} for {levels} levels"
        )


# The Haar kernel pair. Swapping wavelet families means replacing these two.

def haar_analysis(a: np.ndarray, b: np.ndarray, mode: Mode) -> tuple[np.ndarray, np.ndarray]:
    if mode == Mode.INTEGER:
        return (a + b) // 2, a - b
    return (a + b) / SQRT2, (a - b) / SQRT2


def haar_synthesis(s: np.ndarray, d: np.ndarray, mode: Mode) -> tuple[np.ndarray, np.ndarray]:
    if mode == Mode.INTEGER:
        a = s - ((-d) // 2)  # s + ceil(d / 2)
        return a, a - d
    return (s + d) / SQRT2, (s - d) / SQRT2


def _forward_axis(x: np.ndarray, axis: int, mode: Mode) -> np.ndarray:
    if axis == 1:
        s, d = haar_analysis(x[:, 0::2], x[:, 1::2], mode)
    else:
        s, d = haar_analysis(x[0::2, :], x[1::2, :], mode)
    return np.concatenate([s, d], axis=axis)


def _inverse_axis(x: np.ndarray, axis: int, mode: Mode) -> np.ndarray:
    out = np.empty_like(x)
    n = x.shape[axis] // 2
    if axis == 1:
        a, b = haar_synthesis(x[:, :n], x[:, n:], mode)
        out[:, 0::2], out[:, 1::2] = a, b
    else:
        a, b = haar_synthesis(x[:n, :], x[n:, :], mode)
        out[0::2, :], out[1::2, :] = a, b
    return out


def dwt2(img: np.ndarray, levels: int = 3, mode: Mode | str = Mode.INTEGER) -> WaveletPyramid:
    """Forward transform of a grayscale image.

    In integer mode the image is rounded to integers first.
    """
    mode = Mode.parse(mode)
    img = np.asarray(img)
    check_shape(img.shape, levels)
    if mode == Mode.INTEGER:
        work = np.rint(img).astype(np.int64)
    else:
        work = img.astype(np.float64)
    h, w = work.shape
    for _ in range(levels):
        region = work[:h, :w]
        region = _forward_axis(region, 1, mode)
        region = _forward_axis(region, 0, mode)
        work[:h, :w] = region
        h //= 2
        w //= 2
    return WaveletPyramid(work.astype(np.float64), levels, mode)


def idwt2(pyr: WaveletPyramid) -> np.ndarray:
    """Inverse transform back to a float64 image.

    Integer-mode pyramids holding non-integer values (e.g. after fusion) are
    rounded to the nearest integer before the exact integer inverse runs.
    """
    check_shape(pyr.coeffs.shape, pyr.levels)
    mode = pyr.mode
    if mode == Mode.INTEGER:
        work = np.rint(pyr.coeffs).astype(np.int64)
    else:
        work = pyr.coeffs.astype(np.float64)
    H, W = work.shape
    for lev in range(pyr.levels, 0, -1):
        h, w = H >> (lev - 1), W >> (lev - 1)
        region = work[:h, :w]
        region = _inverse_axis(region, 0, mode)
        region = _inverse_axis(region, 1, mode)
        work[:h, :w] = region
    return work.astype(np.float64)


def band_slices(shape: tuple[int, int], levels: int, band: str, level: int) -> tuple[slice, slice]:
    """Row/column slices of one subband. ``level`` is ignored for ``"LL"``."""
    H, W = shape
    if band == "LL":
        return slice(0, H >> levels), slice(0, W >> levels)
    if not 1 <= level <= levels:
        raise IndexError(f"level {level} outside 1..{levels}")
    h, w = H >> level, W >> level
    if band == "HL":
        return slice(0, h), slice(w, 2 * w)
    if band == "LH":
        return slice(h, 2 * h), slice(0, w)
    if band == "HH":
        return slice(h, 2 * h), slice(w, 2 * w)
    raise ValueError(f"unknown band {band!r}")


def subband_of(pyr: WaveletPyramid, i: int, j: int) -> tuple[str, int]:
    """Label of the subband holding coefficient ``(i, j)``.

    Returns ``(label, level)``; the LL band reports the coarsest level.
    """
    H, W = pyr.shape
    if not (0 <= i < H and 0 <= j < W):
        raise IndexError(f"({i}, {j}) outside {H}x{W} grid")
    for level in range(1, pyr.levels + 1):
        h, w = H >> level, W >> level
        if i >= h or j >= w:
            if i < h:
                return "HL", level
            if j < w:
                return "LH", level
            return "HH", level
    return "LL", pyr.levels


def ll_mask(shape: tuple[int, int], levels: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[band_slices(shape, levels, "LL", levels)] = True
    return mask


def format_coeffs(pyr: WaveletPyramid) -> str:
    """Plain-text dump, one grid row per line, values space-separated."""
    fmt = "%d" if pyr.mode == Mode.INTEGER else "%.17g"
    return "\n".join(" ".join(fmt % v for v in row) for row in pyr.coeffs) + "\n"


def parse_coeffs(text: str, levels: int, mode: Mode | str) -> WaveletPyramid:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if len({len(r) for r in rows}) != 1:
        raise ShapeError("ragged coefficient dump")
    return WaveletPyramid(np.array(rows, dtype=np.float64), levels, Mode.parse(mode))
