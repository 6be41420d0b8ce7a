"""SPIHT embedded bitplane coder.

The coder works on integers. Integer-mode pyramids are coded as they are;
float pyramids are divided by a quantisation step (default 1/64) and rounded
first, and the step travels in the header.

Bit schedule per pass ``u = 0..P`` with threshold ``T = 2**(P - u)``:

1. every LIP entry: significance bit, then a sign bit (1 = negative) if
   significant; significant entries move to the LSP;
2. every LIS entry in order, including entries appended during the scan:
   type A tests its descendant set, type B its grand-descendant set; a
   significant type A set emits its four children (as in step 1) and moves to
   the end as type B if it has grandchildren; a significant type B set is
   replaced by four type A sets appended at the end;
3. every LSP entry found in an earlier pass emits bit ``P - u`` of its
   magnitude.

The same schedule supports pruning with a binary mask: masked-out
coefficients are never tested, and LIP/LIS entries whose coefficient or set is
entirely masked out are dropped from the lists during the sorting pass, at
both ends.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bitstream as bsfmt
from .bitstream import SpihtBitstream
from .errors import BudgetTooSmall, FormatError, RangeError
from .wavelet import Mode, WaveletPyramid, band_slices, check_shape

DEFAULT_FLOAT_STEP = Fraction(1, 64)

# code kinds, stored as kind * 2 + bit in the encoder's output list
SIG, SIGN, REFINE = 0, 1, 2


class SpatialTree:
    """Parent/child links of the spatial-orientation trees for one grid shape.

    ``child0[k]`` is the flat index of the top-left child of coefficient ``k``
    or -1; the four children are always the 2x2 block
    ``child0, child0 + 1, child0 + W, child0 + W + 1``.
    """

    def __init__(self, shape: tuple[int, int], levels: int):
        check_shape(shape, levels)
        H, W = shape
        self.shape = (H, W)
        self.levels = levels
        self.width = W
        hL, wL = H >> levels, W >> levels
        flat = np.arange(H * W, dtype=np.int64).reshape(H, W)
        child0 = np.full(H * W, -1, dtype=np.int64)

        # nodes grouped by level, finest parents first, LL roots last
        self.parents_by_level: list[np.ndarray] = []
        for level in range(2, levels + 1):
            nodes = []
            for band in ("HL", "LH", "HH"):
                rs, cs = band_slices(shape, levels, band, level)
                ii, jj = np.mgrid[rs, cs]
                child0[flat[rs, cs].ravel()] = (2 * ii * W + 2 * jj).ravel()
                nodes.append(flat[rs, cs].ravel())
            self.parents_by_level.append(np.concatenate(nodes))

        ii, jj = np.mgrid[0:hL, 0:wL]
        di, dj = ii % 2, jj % 2
        ll_child = (ii - di + di * hL) * W + (jj - dj + dj * wL)
        childless = (di == 0) & (dj == 0)
        ll_child[childless] = -1
        child0[flat[:hL, :wL].ravel()] = ll_child.ravel()

        self.ll = flat[:hL, :wL].ravel()
        self.roots = flat[:hL, :wL][~childless]
        self.parents_by_level.append(self.roots)
        self.child0 = child0
        has_child = child0 >= 0
        self.has_grand = np.zeros(H * W, dtype=bool)
        self.has_grand[has_child] = child0[child0[has_child]] >= 0

    def children(self, k: int) -> tuple[int, ...]:
        c = int(self.child0[k])
        if c < 0:
            return ()
        W = self.width
        return (c, c + 1, c + W, c + W + 1)

    def set_maxima(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-node maximum of ``values`` over descendants and grand-descendants."""
        W = self.width
        values = np.asarray(values).ravel()
        desc = np.zeros_like(values)
        for nodes in self.parents_by_level:
            c = self.child0[nodes]
            sub = np.maximum(values, desc)
            desc[nodes] = np.maximum(np.maximum(sub[c], sub[c + 1]),
                                     np.maximum(sub[c + W], sub[c + W + 1]))
        grand = np.zeros_like(values)
        nodes = np.flatnonzero(self.has_grand)
        c = self.child0[nodes]
        grand[nodes] = np.maximum(np.maximum(desc[c], desc[c + 1]),
                                  np.maximum(desc[c + W], desc[c + W + 1]))
        return desc, grand


@functools.lru_cache(maxsize=32)
def spatial_tree(shape: tuple[int, int], levels: int) -> SpatialTree:
    return SpatialTree(tuple(shape), levels)


def offspring(c: tuple[int, int], pyr: WaveletPyramid) -> set[tuple[int, int]]:
    """Coordinates of the direct children of ``c`` in the tree layout."""
    i, j = c
    H, W = pyr.shape
    if not (0 <= i < H and 0 <= j < W):
        raise IndexError(f"{c} outside {H}x{W} grid")
    tree = spatial_tree(pyr.shape, pyr.levels)
    return {divmod(k, W) for k in tree.children(i * W + j)}


def bitplane(max_abs: int) -> int:
    return max(int(max_abs).bit_length() - 1, 0)


def max_bitplane(pyr: WaveletPyramid) -> tuple[int, bool]:
    """``(P, all_zero)`` with ``P = floor(log2(max |c|))``; ``(0, True)`` if all zero."""
    top = float(np.max(np.abs(pyr.coeffs)))
    if top == 0:
        return 0, True
    return max(int(np.floor(np.log2(top))), 0), False


def threshold(P: int, u: int) -> int:
    if not 0 <= u <= P:
        raise RangeError(f"pass {u} outside 0..{P}")
    return 1 << (P - u)


def default_step(mode: Mode) -> Fraction:
    return DEFAULT_FLOAT_STEP if mode == Mode.FLOAT else Fraction(1)


def integerize(pyr: WaveletPyramid, quant_step: Fraction | None = None) -> np.ndarray:
    """Integer coefficient grid the coder runs on (int64)."""
    step = Fraction(quant_step) if quant_step is not None else default_step(pyr.mode)
    coeffs = pyr.coeffs if step == 1 else pyr.coeffs * (step.denominator / step.numerator)
    return np.rint(coeffs).astype(np.int64)


@dataclass
class CodingStats:
    """Per-stream bit accounting and optional list snapshots."""

    significance_bits: int = 0
    sign_bits: int = 0
    refinement_bits: int = 0
    pass_ends: list[int] = field(default_factory=list)
    pass_counts: list[tuple[int, int, int]] = field(default_factory=list)
    snapshots: list[tuple[tuple, tuple, tuple]] = field(default_factory=list)
    complete: bool = True

    @property
    def total_bits(self) -> int:
        return self.significance_bits + self.sign_bits + self.refinement_bits


def _snapshot(lip, lis, lsp):
    return tuple(lip), tuple((e >> 1, "B" if e & 1 else "A") for e in lis), tuple(lsp)


def _initial_lists(tree: SpatialTree, live=None, dany=None, prefilter: bool = False):
    lip = tree.ll.tolist()
    roots = tree.roots.tolist()
    if live is not None and prefilter:
        lip = [k for k in lip if live[k]]
        roots = [k for k in roots if dany[k]]
    return lip, [k * 2 for k in roots]


def encode_core(values: np.ndarray, tree: SpatialTree, P: int, mask: np.ndarray | None = None,
                budget: int | None = None, prefilter: bool = False,
                trace: bool = False) -> tuple[list[int], CodingStats]:
    """Run the encoder schedule on a flat integer grid.

    Returns the list of codes (``kind * 2 + bit``) and stats. Coding stops
    once ``budget`` bits have been produced; the caller truncates the tail.
    Masked-out entries of ``values`` must already be zero.
    """
    W = tree.width
    mag_np = np.abs(np.asarray(values, dtype=np.int64).ravel())
    mag = mag_np.tolist()
    neg = (np.asarray(values).ravel() < 0).tolist()
    dmax, gmax = (a.tolist() for a in tree.set_maxima(mag_np))
    child0 = tree.child0.tolist()
    has_grand = tree.has_grand.tolist()
    pruned = mask is not None
    if pruned:
        mflat = np.asarray(mask, dtype=bool).ravel()
        dany_np, gany_np = tree.set_maxima(mflat.astype(np.int8))
        live = mflat.tolist()
        dany, gany = dany_np.astype(bool).tolist(), gany_np.astype(bool).tolist()
        lip, lis = _initial_lists(tree, live, dany, prefilter)
    else:
        lip, lis = _initial_lists(tree)
    lsp: list[int] = []
    out: list[int] = []
    append = out.append
    stats = CodingStats()
    if trace:
        stats.snapshots.append(_snapshot(lip, lis, lsp))

    for u in range(P + 1):
        if budget is not None and len(out) >= budget:
            break
        T = 1 << (P - u)
        n_old = len(lsp)

        kept = []
        for k in lip:
            if pruned and not live[k]:
                continue
            if mag[k] >= T:
                append(1)
                append(3 if neg[k] else 2)
                lsp.append(k)
            else:
                append(0)
                kept.append(k)
        lip = kept

        kept_sets = []
        pos = 0
        while pos < len(lis):
            e = lis[pos]
            pos += 1
            k = e >> 1
            if e & 1:
                if pruned and not gany[k]:
                    continue
                if gmax[k] >= T:
                    append(1)
                    c = child0[k]
                    lis.extend((c * 2, (c + 1) * 2, (c + W) * 2, (c + W + 1) * 2))
                else:
                    append(0)
                    kept_sets.append(e)
            else:
                if pruned and not dany[k]:
                    continue
                if dmax[k] >= T:
                    append(1)
                    c = child0[k]
                    for ch in (c, c + 1, c + W, c + W + 1):
                        if pruned and not live[ch]:
                            continue
                        if mag[ch] >= T:
                            append(1)
                            append(3 if neg[ch] else 2)
                            lsp.append(ch)
                        else:
                            append(0)
                            lip.append(ch)
                    if has_grand[k]:
                        lis.append(e | 1)
                else:
                    append(0)
                    kept_sets.append(e)
        lis = kept_sets

        if n_old:
            idx = np.array(lsp[:n_old], dtype=np.int64)
            out.extend((4 + ((mag_np[idx] >> (P - u)) & 1)).tolist())
        stats.pass_ends.append(len(out))
        if trace:
            stats.snapshots.append(_snapshot(lip, lis, lsp))
    return out, stats


def _finish_stats(codes: np.ndarray, stats: CodingStats, complete: bool) -> CodingStats:
    """Recount bits after truncation; ``pass_ends`` keeps completed passes only."""
    n = len(codes)
    kinds = codes >> 1
    stats.significance_bits, stats.sign_bits, stats.refinement_bits = (
        int(x) for x in np.bincount(kinds, minlength=3)[:3])
    stats.pass_ends = [e for e in stats.pass_ends if e <= n]
    bounds = stats.pass_ends + ([n] if not stats.pass_ends or stats.pass_ends[-1] < n else [])
    counts, start = [], 0
    for end in bounds:
        kc = np.bincount(kinds[start:end], minlength=3)
        counts.append(tuple(int(x) for x in kc[:3]))
        start = end
    stats.pass_counts = counts
    stats.complete = complete
    return stats


class _Exhausted(Exception):
    pass


def decode_core(bits, tree: SpatialTree, P: int, mask: np.ndarray | None = None,
                prefilter: bool = False, trace: bool = False) -> tuple[np.ndarray, CodingStats]:
    """Mirror of :func:`encode_core`; returns the flat integer grid and stats.

    When the bits run out before the last pass completes, every significant
    coefficient is moved to the middle of its remaining uncertainty interval:
    half of the lowest bitplane received for it is added to its magnitude.
    """
    W = tree.width
    N = tree.child0.size
    bits = np.asarray(bits, dtype=np.int64)
    nbits = int(bits.size)
    blist = bits.tolist()
    mag = np.zeros(N, dtype=np.int64)
    low = np.full(N, -1, dtype=np.int64)
    neg = np.zeros(N, dtype=bool)
    child0 = tree.child0.tolist()
    has_grand = tree.has_grand.tolist()
    pruned = mask is not None
    if pruned:
        mflat = np.asarray(mask, dtype=bool).ravel()
        dany_np, gany_np = tree.set_maxima(mflat.astype(np.int8))
        live = mflat.tolist()
        dany, gany = dany_np.astype(bool).tolist(), gany_np.astype(bool).tolist()
        lip, lis = _initial_lists(tree, live, dany, prefilter)
    else:
        lip, lis = _initial_lists(tree)
    lsp: list[int] = []
    stats = CodingStats()
    if trace:
        stats.snapshots.append(_snapshot(lip, lis, lsp))
    pos = 0
    complete = True

    try:
        for u in range(P + 1):
            T = 1 << (P - u)
            plane = P - u
            n_old = len(lsp)
            if pos >= nbits:
                raise _Exhausted

            kept = []
            for k in lip:
                if pruned and not live[k]:
                    continue
                if pos >= nbits:
                    raise _Exhausted
                b = blist[pos]
                pos += 1
                if b:
                    lsp.append(k)
                    mag[k] = T
                    low[k] = plane
                    if pos >= nbits:
                        raise _Exhausted
                    neg[k] = blist[pos]
                    pos += 1
                else:
                    kept.append(k)
            lip = kept

            kept_sets = []
            at = 0
            while at < len(lis):
                e = lis[at]
                at += 1
                k = e >> 1
                if e & 1:
                    if pruned and not gany[k]:
                        continue
                    if pos >= nbits:
                        raise _Exhausted
                    b = blist[pos]
                    pos += 1
                    if b:
                        c = child0[k]
                        lis.extend((c * 2, (c + 1) * 2, (c + W) * 2, (c + W + 1) * 2))
                    else:
                        kept_sets.append(e)
                else:
                    if pruned and not dany[k]:
                        continue
                    if pos >= nbits:
                        raise _Exhausted
                    b = blist[pos]
                    pos += 1
                    if b:
                        c = child0[k]
                        for ch in (c, c + 1, c + W, c + W + 1):
                            if pruned and not live[ch]:
                                continue
                            if pos >= nbits:
                                raise _Exhausted
                            b = blist[pos]
                            pos += 1
                            if b:
                                lsp.append(ch)
                                mag[ch] = T
                                low[ch] = plane
                                if pos >= nbits:
                                    raise _Exhausted
                                neg[ch] = blist[pos]
                                pos += 1
                            else:
                                lip.append(ch)
                        if has_grand[k]:
                            lis.append(e | 1)
                    else:
                        kept_sets.append(e)
            lis = kept_sets

            if n_old:
                take = min(n_old, nbits - pos)
                idx = np.array(lsp[:take], dtype=np.int64)
                mag[idx] |= bits[pos:pos + take] << plane
                low[idx] = plane
                pos += take
                if take < n_old:
                    raise _Exhausted
            stats.pass_ends.append(pos)
            if trace:
                stats.snapshots.append(_snapshot(lip, lis, lsp))
    except _Exhausted:
        complete = False

    if not complete:
        refine = low >= 1
        mag[refine] += np.left_shift(1, low[refine] - 1)
    stats.complete = complete
    return np.where(neg, -mag, mag), stats


def _payload_budget(max_bits: int | None, mask: np.ndarray | None) -> int | None:
    if max_bits is None:
        return None
    head = 8 * bsfmt.header_size(mask)
    if max_bits < head:
        raise BudgetTooSmall(f"budget of {max_bits} bits is below the {head}-bit header")
    return max_bits - head


def encode_values(values: np.ndarray, levels: int, mode: Mode, quant_step: Fraction,
                  max_bits: int | None = None, mask: np.ndarray | None = None,
                  scale_shift: int = 0, remspiht: bool = False, prefilter: bool = False,
                  trace: bool = False) -> tuple[SpihtBitstream, CodingStats]:
    """Code an integer grid into an RMS1 stream (shared by both coders)."""
    values = np.asarray(values, dtype=np.int64)
    H, W = values.shape
    if H > 0xFFFF or W > 0xFFFF:
        raise FormatError("dimensions exceed the 16-bit header fields")
    tree = spatial_tree((H, W), levels)
    budget = _payload_budget(max_bits, mask)
    top = int(np.max(np.abs(values))) if values.size else 0
    all_zero = top == 0
    P = bitplane(top)
    if P > 0xFF:
        raise FormatError("bitplane count exceeds the header field")
    if all_zero:
        codes, stats = [], CodingStats(pass_ends=[])
    else:
        codes, stats = encode_core(values.ravel(), tree, P, mask=mask, budget=budget,
                                   prefilter=prefilter, trace=trace)
    full = len(codes)
    if budget is not None and len(codes) > budget:
        codes = codes[:budget]
    carr = np.asarray(codes, dtype=np.int64)
    complete = len(codes) == full and (all_zero or len(stats.pass_ends) == P + 1)
    stats = _finish_stats(carr, stats, complete)
    bs = SpihtBitstream(
        width=W, height=H, levels=levels, mode=mode, P=P,
        payload=bsfmt.pack_bits(carr & 1), bit_count=len(codes),
        remspiht=remspiht, all_zero=all_zero, scale_shift=scale_shift,
        quant_step=Fraction(quant_step), mask=mask,
    )
    return bs, stats


def encode_with_stats(pyr: WaveletPyramid, max_bits: int | None = None,
                      quant_step: Fraction | None = None,
                      trace: bool = False) -> tuple[SpihtBitstream, CodingStats]:
    step = Fraction(quant_step) if quant_step is not None else default_step(pyr.mode)
    values = integerize(pyr, step)
    return encode_values(values, pyr.levels, pyr.mode, step, max_bits=max_bits, trace=trace)


def encode(pyr: WaveletPyramid, max_bits: int | None = None,
           quant_step: Fraction | None = None) -> SpihtBitstream:
    """Plain SPIHT encode.

    ``max_bits`` is the total stream budget in bits, header included;
    ``None`` codes every bitplane.
    """
    return encode_with_stats(pyr, max_bits, quant_step)[0]


def decode_values(bs: SpihtBitstream, upto_bits: int | None = None,
                  trace: bool = False) -> tuple[np.ndarray, CodingStats]:
    """Decode the integer grid of a stream, honouring its mask if present."""
    check_shape(bs.shape, bs.levels)
    n = bs.bit_count if upto_bits is None else max(0, min(upto_bits, bs.bit_count))
    if bs.all_zero:
        return np.zeros(bs.shape, dtype=np.int64), CodingStats()
    tree = spatial_tree(bs.shape, bs.levels)
    flat, stats = decode_core(bs.bits()[:n], tree, bs.P, mask=bs.mask, trace=trace)
    return flat.reshape(bs.shape), stats


def to_pyramid(values: np.ndarray, bs: SpihtBitstream) -> WaveletPyramid:
    step = Fraction(bs.quant_step)
    coeffs = values.astype(np.float64)
    if step != 1:
        coeffs = coeffs * (step.numerator / step.denominator)
    return WaveletPyramid(coeffs, bs.levels, bs.mode)


def decode(bs: SpihtBitstream, upto_bits: int | None = None) -> WaveletPyramid:
    """Decode a plain SPIHT stream, optionally from its first ``upto_bits`` bits."""
    if bs.remspiht:
        raise FormatError("RE-MSPIHT stream: use remspiht.decode_remspiht")
    values, _ = decode_values(bs, upto_bits)
    return to_pyramid(values, bs)
