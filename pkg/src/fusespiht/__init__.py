"""Wavelet image fusion and SPIHT / RE-MSPIHT progressive coding."""

from .bitstream import SpihtBitstream, from_bytes
from .fusion import FusionRule, PcaWeights, fuse, pca_weights
from .metrics import compression_ratio, entropy, mse, psnr
from .pixelio import crop_to_common, load_pgm, save_pgm
from .remspiht import CaseI, CaseII, RemspihtConfig, decode_any, decode_remspiht, encode_remspiht
from .spiht import decode, encode
from .wavelet import Mode, WaveletPyramid, dwt2, idwt2, subband_of
from .weighting import WeightMap

__all__ = [
    "CaseI", "CaseII", "FusionRule", "Mode", "PcaWeights", "RemspihtConfig", "SpihtBitstream",
    "WaveletPyramid", "WeightMap", "compression_ratio", "crop_to_common", "decode", "decode_any",
    "decode_remspiht", "dwt2", "encode", "encode_remspiht", "entropy", "from_bytes", "fuse",
    "idwt2", "load_pgm", "mse", "pca_weights", "psnr", "save_pgm", "subband_of",
]
