"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary."""

import csv
import functools
import math
import time

import numpy as np
import pytest

import reference_spiht
from conftest import ACCEPTANCE_LINES, DATA, FIXTURE_IMAGES, two_texture_mosaic
from fusespiht import spiht
from fusespiht.fusion import FusionRule, fuse, fuse_pyramids, pca_weights
from fusespiht.metrics import compression_ratio, entropy, mse, psnr
from fusespiht.pixelio import load_pgm
from fusespiht.remspiht import RemspihtConfig, encode_remspiht_with_stats, decode_remspiht
from fusespiht.wavelet import Mode, WaveletPyramid, dwt2, idwt2, ll_mask
from fusespiht.weighting import (WeightMap, em_step, init_mixture, kmeans, log_likelihood)

from test_weighting import two_component_features


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(**kwargs):
            detail = kwargs["detail"]
            try:
                fn(**kwargs)
            except BaseException:
                ACCEPTANCE_LINES.append(f"FAIL  AC{number:<2} {title} {_fmt(detail)}")
                raise
            ACCEPTANCE_LINES.append(f"PASS  AC{number:<2} {title} {_fmt(detail)}")
        return run
    return wrap


def _fmt(detail):
    return " ".join(f"{k}={v}" for k, v in detail.items())


@pytest.fixture
def detail():
    return {}


@pytest.fixture(scope="module")
def mosaic():
    img = two_texture_mosaic()
    return img, dwt2(img, 3)


@criterion(1, "lossless round trip, 50 random 64x64 images")
def test_ac1_lossless(detail):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(50):
        img = rng.integers(0, 256, (64, 64))
        bs = spiht.encode(dwt2(img, 3, Mode.INTEGER))
        assert np.array_equal(idwt2(spiht.decode(bs)), img)
    elapsed = time.perf_counter() - start
    detail["seconds"] = f"{elapsed:.2f}"
    assert elapsed < 5.0


@criterion(2, "payload identical to reference coder, 100 random 8x8 pyramids")
def test_ac2_oracle(detail):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    for n in range(100):
        L = 1 + n % 2
        if n % 3 == 0:
            v = rng.integers(-512, 512, (8, 8))
        else:   # sparse pyramids exercise the set-partitioning branches
            v = rng.integers(-64, 64, (8, 8)) * (rng.random((8, 8)) < 0.3)
        bs = spiht.encode(WaveletPyramid(v.astype(float), L, Mode.INTEGER))
        assert bs.bits().tolist() == reference_spiht.encode(v.tolist(), L), n
    elapsed = time.perf_counter() - start
    detail["seconds"] = f"{elapsed:.2f}"
    assert elapsed < 10.0


@criterion(3, "embedded: pass-boundary MSE non-increasing, lossless at full depth")
def test_ac3_embedded(detail):
    for name in FIXTURE_IMAGES:
        img = load_pgm(DATA / f"{name}.pgm")
        bs, stats = spiht.encode_with_stats(dwt2(img, 3))
        errs = [mse(img, idwt2(spiht.decode(bs, upto_bits=e))) for e in stats.pass_ends]
        assert all(b <= a for a, b in zip(errs, errs[1:])), name
        assert psnr(img, idwt2(spiht.decode(bs))) == math.inf
        detail[name] = len(errs)


@criterion(4, "all-ones weights with shift 0 match plain SPIHT, 20 fixtures")
def test_ac4_degenerate(detail):
    rng = np.random.default_rng(404)
    for n in range(20):
        img = rng.integers(0, 256, (32, 32))
        pyr = dwt2(img, 1 + n % 3)
        cfg = RemspihtConfig(scale_shift=0, weights=WeightMap.ones(pyr.shape))
        rem, _, _ = encode_remspiht_with_stats(pyr, cfg)
        assert rem.bits().tolist() == spiht.encode(pyr).bits().tolist()
    detail["fixtures"] = 20


@criterion(5, "pruning: RE-MSPIHT stream smaller, CR higher on the mosaic")
def test_ac5_pruning(detail, mosaic):
    img, pyr = mosaic
    start = time.perf_counter()
    rem, _, weights = encode_remspiht_with_stats(pyr, RemspihtConfig())
    plain = spiht.encode(pyr)
    elapsed = time.perf_counter() - start
    support = weights.mask.mean()
    detail.update(support=f"{support:.3f}", rem_bytes=rem.total_bytes(),
                  spiht_bytes=plain.total_bytes(), seconds=f"{elapsed:.2f}")
    assert support <= 0.5
    assert rem.total_bytes() <= plain.total_bytes()
    assert compression_ratio(img, rem) > compression_ratio(img, plain)
    assert elapsed < 2.0


@criterion(6, "prioritization: lower mask-region MSE at 0.25 bpp")
def test_ac6_priority(detail, mosaic):
    img, pyr = mosaic
    budget = img.size // 4
    rem, _, weights = encode_remspiht_with_stats(pyr, RemspihtConfig(scale_shift=2, budget=budget))
    plain = spiht.encode(pyr, max_bits=budget)
    region = weights.mask
    err_rem = np.mean((decode_remspiht(rem).coeffs - pyr.coeffs)[region] ** 2)
    err_plain = np.mean((spiht.decode(plain).coeffs - pyr.coeffs)[region] ** 2)
    detail.update(rem_mse=f"{err_rem:.2f}", spiht_mse=f"{err_plain:.2f}")
    assert err_rem < err_plain


@criterion(7, "fusion identities")
def test_ac7_fusion(detail):
    rng = np.random.default_rng(707)
    a = rng.integers(0, 256, (32, 32))
    for rule in FusionRule:
        assert np.array_equal(fuse(a, a, rule, 3, Mode.INTEGER), a)
        assert np.max(np.abs(fuse(a, a, rule, 3, Mode.FLOAT) - a)) <= 1e-9
    for _ in range(20):
        p1 = dwt2(rng.integers(0, 256, (32, 32)), 3)
        p2 = dwt2(rng.integers(0, 256, (32, 32)), 3)
        m1, m2 = np.abs(p1.coeffs), np.abs(p2.coeffs)
        assert np.all(np.abs(fuse_pyramids(p1, p2, "max").coeffs) >= np.maximum(m1, m2))
        assert np.all(np.abs(fuse_pyramids(p1, p2, "min").coeffs) <= np.minimum(m1, m2))
        b = rng.integers(0, 256, (32, 32))
        w = pca_weights(a, b)
        assert abs(w.a1 + w.a2 - 1) <= 1e-12
    w = pca_weights(a, a)
    assert abs(w.a1 - 0.5) <= 1e-12 and abs(w.a2 - 0.5) <= 1e-12
    detail["pairs"] = 20


@criterion(8, "entropy anchors")
def test_ac8_entropy(detail, tmp_path):
    assert entropy(np.full((16, 16), 99)) == 0.0
    assert entropy(np.arange(256)) == 8.0
    # fusion-rule entropies are reported, not asserted
    a = load_pgm(DATA / "texture.pgm")
    b = load_pgm(DATA / "disc.pgm")
    path = tmp_path / "fusion_entropy.csv"
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["rule", "entropy_bits"])
        for rule in FusionRule:
            h = entropy(np.clip(np.rint(fuse(a, b, rule)), 0, 255), "pixel256")
            out.writerow([rule.value, f"{h:.4f}"])
            detail[rule.value] = f"{h:.3f}"
    assert path.exists()


@criterion(9, "k-means objective and EM likelihood monotone")
def test_ac9_clustering(detail):
    X = two_component_features(909, n=400, d=6)
    for seed in range(10):
        obj = kmeans(X, 3, seed=seed).objective
        assert all(b <= a for a, b in zip(obj, obj[1:])), seed
    worst = 0.0
    for seed in range(5):
        X = two_component_features(seed)
        model = init_mixture(X, kmeans(X, 2, seed=seed).assignments, 2)
        prev = log_likelihood(X, model)
        for _ in range(20):
            model = em_step(X, model)
            assert abs(model.alpha.sum() - 1.0) <= 1e-12
            cur = log_likelihood(X, model)
            worst = min(worst, cur - prev)
            assert cur >= prev - 1e-9 * abs(prev)
            prev = cur
    detail["worst_em_step"] = f"{worst:.2e}"


@criterion(10, "Parseval and constant-image transform checks")
def test_ac10_transform(detail):
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(20):
        img = rng.integers(0, 256, (16, 16)).astype(float)
        e_in = (img ** 2).sum()
        e_out = (dwt2(img, 3, Mode.FLOAT).coeffs ** 2).sum()
        worst = max(worst, abs(e_in - e_out) / e_in)
    assert worst <= 1e-6
    for mode in Mode:
        pyr = dwt2(np.full((16, 16), 123), 3, mode)
        assert not pyr.coeffs[~ll_mask(pyr.shape, 3)].any()
    detail["parseval_rel_err"] = f"{worst:.1e}"
