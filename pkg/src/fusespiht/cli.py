"""Batch command line front-end.

Exit status: 0 success, 1 usage error, 2 processing error. Diagnostics go to
stderr; data only to the files named on the command line.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import bitstream, metrics, remspiht, spiht, weighting
from .errors import FuseSpihtError
from .fusion import FusionRule, fuse
from .pixelio import crop_to_common, load_pgm, save_pgm
from .wavelet import Mode, dwt2, idwt2

log = logging.getLogger("fusespiht")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _m_value(text: str):
    """``--m`` accepts a count (``5000``) or a fraction (``0.4``)."""
    try:
        return int(text)
    except ValueError:
        return float(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fusespiht", description="Wavelet image fusion and SPIHT/RE-MSPIHT coding.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    dflt = argparse.ArgumentDefaultsHelpFormatter

    f = sub.add_parser("fuse", help="fuse two registered PGM images", formatter_class=dflt)
    f.add_argument("image1")
    f.add_argument("image2")
    f.add_argument("-o", "--output", required=True)
    f.add_argument("--rule", choices=[r.value for r in FusionRule], default="avg")
    f.add_argument("--levels", type=int, default=3)
    f.add_argument("--mode", choices=["int", "float"], default="int")

    e = sub.add_parser("encode", help="compress a PGM image to an RMS1 stream", formatter_class=dflt)
    e.add_argument("input")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--coder", choices=["spiht", "remspiht"], default="spiht")
    e.add_argument("--budget-bits", type=int, default=None,
                   help="total stream budget in bits, header included (default: all bitplanes)")
    e.add_argument("--levels", type=int, default=3)
    e.add_argument("--mode", choices=["int", "float"], default="int")
    g = e.add_argument_group("RE-MSPIHT options (only with --coder remspiht)")
    g.add_argument("--scale-shift", type=int, default=None, help="power-of-two scaling exponent [2]")
    g.add_argument("--mask", choices=["case1", "case2"], default=None, help="weight route [case2]")
    g.add_argument("--u0", type=int, default=None, help="case1 threshold offset [1]")
    g.add_argument("--policy", choices=["all", "any"], default=None, help="case1 triple policy [all]")
    g.add_argument("--k", type=int, default=None, help="case2 cluster count [2]")
    g.add_argument("--seed", type=int, default=None, help="case2 k-means seed [0]")
    g.add_argument("--em-iters", type=int, default=None, help="case2 EM iterations [10]")
    g.add_argument("--m", type=_m_value, default=None,
                   help="case2 retained count or fraction [top cluster]")
    g.add_argument("--lambda", dest="lam", type=float, default=None, help="case2 multiplier [4.0]")
    g.add_argument("--prefilter", action="store_true", help="drop blocked entries before the first pass")

    d = sub.add_parser("decode", help="decode an RMS1 stream to PGM", formatter_class=dflt)
    d.add_argument("input")
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--upto-bits", type=int, default=None, help="decode only this payload prefix")

    s = sub.add_parser("segment", help="cluster wavelet trees into textures", formatter_class=dflt)
    s.add_argument("input")
    s.add_argument("-o", "--output", default=None, help="label image (PGM)")
    s.add_argument("--csv", default=None, help="cluster statistics CSV")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--em-iters", type=int, default=10)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--mode", choices=["int", "float"], default="int")

    m = sub.add_parser("metrics", help="PSNR / MSE / CR / entropy report", formatter_class=dflt)
    m.add_argument("--orig", required=True)
    m.add_argument("--decoded", required=True)
    m.add_argument("--stream", required=True)
    m.add_argument("--csv", required=True)
    m.add_argument("--image", default=None, help="image name in the report [orig file stem]")
    return p


_REM_FLAGS = ("scale_shift", "mask", "u0", "policy", "k", "seed", "em_iters", "m", "lam")
_CASE1_FLAGS = ("u0", "policy")
_CASE2_FLAGS = ("k", "seed", "em_iters", "m", "lam")


def _validate(args) -> None:
    if args.command == "encode":
        given = [f for f in _REM_FLAGS if getattr(args, f) is not None] + (
            ["prefilter"] if args.prefilter else [])
        if args.coder == "spiht" and given:
            raise UsageError(f"options {given} need --coder remspiht")
        if args.mask == "case1" and any(getattr(args, f) is not None for f in _CASE2_FLAGS):
            raise UsageError("case2 options given with --mask case1")
        if args.mask in (None, "case2") and any(getattr(args, f) is not None for f in _CASE1_FLAGS):
            raise UsageError("case1 options given without --mask case1")
        if args.budget_bits is not None and args.budget_bits < 0:
            raise UsageError("--budget-bits must be non-negative")
        if args.scale_shift is not None and not 0 <= args.scale_shift <= 255:
            raise UsageError("--scale-shift must be in 0..255")
    if getattr(args, "levels", 1) < 1:
        raise UsageError("--levels must be >= 1")
    if getattr(args, "k", None) is not None and args.k < 1:
        raise UsageError("--k must be >= 1")
    if args.command == "decode" and args.upto_bits is not None and args.upto_bits < 0:
        raise UsageError("--upto-bits must be non-negative")


def _write_bytes(path: str, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)


def cmd_fuse(args) -> None:
    a, b = crop_to_common(load_pgm(args.image1), load_pgm(args.image2))
    log.info("fusing %dx%d with rule %s", a.shape[1], a.shape[0], args.rule)
    save_pgm(fuse(a, b, args.rule, args.levels, args.mode), args.output)


def _remspiht_config(args) -> remspiht.RemspihtConfig:
    def opt(name, default):
        value = getattr(args, name)
        return default if value is None else value

    if opt("mask", "case2") == "case1":
        source = remspiht.CaseI(u0=opt("u0", 1), policy=opt("policy", "all"))
    else:
        source = remspiht.CaseII(k=opt("k", 2), seed=opt("seed", 0), em_iters=opt("em_iters", 10))
    return remspiht.RemspihtConfig(
        scale_shift=opt("scale_shift", 2), mask_source=source, m=args.m,
        lam=opt("lam", 4.0), budget=args.budget_bits, prefilter=args.prefilter,
    )


def cmd_encode(args) -> None:
    img = load_pgm(args.input)
    pyr = dwt2(img, args.levels, args.mode)
    if args.coder == "spiht":
        bs = spiht.encode(pyr, args.budget_bits)
    else:
        bs = remspiht.encode_remspiht(pyr, _remspiht_config(args))
    data = bs.to_bytes()
    _write_bytes(args.output, data)
    log.info("wrote %d bytes (%d payload bits, P=%d)", len(data), bs.bit_count, bs.P)


def cmd_decode(args) -> None:
    with open(args.input, "rb") as fh:
        bs = bitstream.from_bytes(fh.read(), allow_truncated=args.upto_bits is not None)
    pyr = remspiht.decode_any(bs, args.upto_bits)
    save_pgm(idwt2(pyr), args.output)


def cmd_segment(args) -> None:
    img = load_pgm(args.input)
    pyr = dwt2(img, args.levels, args.mode)
    assign, _, _ = weighting.segment_trees(pyr, k=args.k, seed=args.seed, em_iters=args.em_iters)
    stats = weighting.cluster_entropy(pyr, assign, args.k)
    if args.output:
        save_pgm(weighting.label_image(assign, pyr.shape, pyr.levels, args.k), args.output)
    if args.csv:
        rows = [{"cluster_id": s.cluster_id, "size": s.size, "entropy_bits": s.entropy_bits,
                 "nonzero_count": s.nonzero_count, "score": s.score} for s in stats]
        if os.path.exists(args.csv):
            os.remove(args.csv)
        metrics.append_csv(args.csv, rows,
                           ("cluster_id", "size", "entropy_bits", "nonzero_count", "score"))
    for s in stats:
        log.info("cluster %d: %d trees, %.3f bits, %d non-zero", s.cluster_id, s.size,
                 s.entropy_bits, s.nonzero_count)


def cmd_metrics(args) -> None:
    orig = load_pgm(args.orig)
    decoded = load_pgm(args.decoded)
    with open(args.stream, "rb") as fh:
        bs = bitstream.from_bytes(fh.read())
    rep = metrics.report(orig, decoded, bs)
    name = args.image or os.path.splitext(os.path.basename(args.orig))[0]
    coder = "remspiht" if bs.remspiht else "spiht"
    budget = 8 * len(bs.header_bytes()) + bs.bit_count
    metrics.append_csv(args.csv, [metrics.report_row(name, coder, budget, rep)])
    log.info("psnr %.3f dB, mse %.4f, cr %.4f", rep.psnr_db, rep.mse, rep.cr)


COMMANDS = {"fuse": cmd_fuse, "encode": cmd_encode, "decode": cmd_decode,
            "segment": cmd_segment, "metrics": cmd_metrics}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except (FuseSpihtError, OSError, ValueError) as exc:
        print(f"fusespiht {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
