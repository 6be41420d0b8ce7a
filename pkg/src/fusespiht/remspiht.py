"""Weighted, pruned SPIHT (RE-MSPIHT).

Encoder pipeline: derive a weight map (threshold route or clustering route),
zero the blocked coefficients, scale the retained detail coefficients by
``2**scale_shift`` and run the SPIHT schedule with the weight support as a
pruning mask. The mask travels in the stream header so the decoder prunes
the same list entries.

Only the binary support is transmitted. In the stream, the support outside
the LL band is the scaled set and LL is never scaled, so real-valued weights
only steer which coefficients are retained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import spiht
from .bitstream import SpihtBitstream
from .errors import ArgumentError, EmptyMask, FormatError
from .spiht import CodingStats, default_step, integerize
from .wavelet import Mode, WaveletPyramid, ll_mask
from .weighting import WeightMap, case2_weights, crossband_mask, rescale


@dataclass(frozen=True)
class CaseI:
    """Threshold route: LL-derived threshold, cross-band retention."""

    u0: int = 1
    policy: str = "all"


@dataclass(frozen=True)
class CaseII:
    """Clustering route: k-means + mixture EM, entropy-ranked weights."""

    k: int = 2
    seed: int = 0
    em_iters: int = 10


@dataclass(frozen=True)
class RemspihtConfig:
    scale_shift: int = 2
    mask_source: CaseI | CaseII = field(default_factory=CaseII)
    m: int | float | None = None
    lam: float = 4.0
    budget: int | None = None
    prefilter: bool = False
    weights: WeightMap | None = None
    quant_step: Fraction | None = None

    def __post_init__(self):
        if not isinstance(self.mask_source, (CaseI, CaseII)):
            raise ArgumentError("mask_source must be CaseI or CaseII")
        if not 0 <= self.scale_shift <= 0xFF:
            raise ArgumentError("scale_shift must be in 0..255")
        if self.lam < 0:
            raise ArgumentError("lambda must be non-negative")


def derive_weights(pyr: WaveletPyramid, cfg: RemspihtConfig) -> WeightMap:
    if cfg.weights is not None:
        if cfg.weights.shape != pyr.shape:
            raise ArgumentError("weight map shape does not match the pyramid")
        return cfg.weights
    src = cfg.mask_source
    if isinstance(src, CaseI):
        return crossband_mask(pyr, src.u0, src.policy)
    return case2_weights(pyr, k=src.k, seed=src.seed, em_iters=src.em_iters,
                         m=cfg.m, lam=cfg.lam)[0]


def stream_weights(mask: np.ndarray, levels: int) -> WeightMap:
    """Weights the stream can express: 0 blocked, 1 on LL, 2 on retained detail."""
    ll = ll_mask(mask.shape, levels)
    return WeightMap(np.where(mask, np.where(ll, 1.0, 2.0), 0.0))


def encode_remspiht_with_stats(pyr: WaveletPyramid, cfg: RemspihtConfig = RemspihtConfig(),
                               trace: bool = False):
    """Encode and return ``(bitstream, stats, weight_map)``."""
    weights = derive_weights(pyr, cfg)
    mask = weights.mask
    if not mask.any():
        raise EmptyMask("weight map retains no coefficient")
    step = Fraction(cfg.quant_step) if cfg.quant_step is not None else default_step(pyr.mode)
    ints = WaveletPyramid(integerize(pyr, step), pyr.levels, Mode.INTEGER)
    scaled = rescale(ints, stream_weights(mask, pyr.levels), cfg.scale_shift)
    values = np.rint(scaled.coeffs).astype(np.int64)
    bs, stats = spiht.encode_values(
        values, pyr.levels, pyr.mode, step, max_bits=cfg.budget, mask=mask,
        scale_shift=cfg.scale_shift, remspiht=True, prefilter=cfg.prefilter, trace=trace,
    )
    return bs, stats, weights


def encode_remspiht(pyr: WaveletPyramid, cfg: RemspihtConfig = RemspihtConfig()) -> SpihtBitstream:
    return encode_remspiht_with_stats(pyr, cfg)[0]


def decode_remspiht_with_stats(bs: SpihtBitstream, upto_bits: int | None = None,
                               trace: bool = False) -> tuple[WaveletPyramid, CodingStats]:
    if not bs.remspiht:
        raise FormatError("not a RE-MSPIHT stream")
    if bs.mask is None:
        raise FormatError("RE-MSPIHT stream without a mask")
    values, stats = spiht.decode_values(bs, upto_bits, trace=trace)
    scaled = stream_weights(bs.mask, bs.levels).weights > 1
    out = values.astype(np.float64)
    out[scaled] /= 1 << bs.scale_shift
    out[~bs.mask] = 0.0
    if bs.mode == Mode.INTEGER:
        out = np.rint(out)
    return spiht.to_pyramid(out, bs), stats


def decode_remspiht(bs: SpihtBitstream, upto_bits: int | None = None) -> WaveletPyramid:
    """Decode a RE-MSPIHT stream and undo the scaling on the retained set."""
    return decode_remspiht_with_stats(bs, upto_bits)[0]


def decode_any(bs: SpihtBitstream, upto_bits: int | None = None) -> WaveletPyramid:
    """Dispatch on the coder flag."""
    if bs.remspiht:
        return decode_remspiht(bs, upto_bits)
    return spiht.decode(bs, upto_bits)
