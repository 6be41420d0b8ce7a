import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fusespiht.errors import ShapeError
from fusespiht.metrics import (append_csv, compression_ratio, entropy, mse, psnr, report,
                               report_row)
from fusespiht.spiht import encode
from fusespiht.wavelet import dwt2


def test_psnr_values():
    a = np.zeros((4, 4))
    assert psnr(a, a) == math.inf
    assert psnr(a, np.full((4, 4), 255.0)) == 0.0
    assert psnr(a, np.ones((4, 4))) == pytest.approx(20 * math.log10(255))


def test_mse_shape_mismatch():
    with pytest.raises(ShapeError):
        mse(np.zeros(3), np.zeros(4))


def test_entropy_anchors():
    assert entropy(np.full((8, 8), 77)) == 0.0
    assert entropy(np.arange(256)) == 8.0
    assert entropy([0, 1]) == 1.0
    assert entropy([0.4, 0.6, 1.4], "integer") == pytest.approx(0.9182958340544896)
    assert entropy([-5, 300], "pixel256") == 1.0
    assert entropy([260, 300], "pixel256") == 0.0


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=200))
def test_entropy_bounds(values):
    h = entropy(values)
    assert 0.0 <= h <= math.log2(len(set(values))) + 1e-12


def test_entropy_empty():
    with pytest.raises(ValueError):
        entropy([])


def test_compression_ratio(rng):
    img = rng.integers(0, 256, (32, 32))
    bs = encode(dwt2(img, 3))
    assert compression_ratio(img, bs) == 1024 / bs.total_bytes()


def test_csv_rows(tmp_path, rng):
    img = rng.integers(0, 256, (16, 16))
    bs = encode(dwt2(img, 2))
    path = tmp_path / "r.csv"
    append_csv(path, [report_row("x", "spiht", 100, report(img, img, bs))])
    append_csv(path, [report_row("y", "spiht", 100, report(img, img * 0, bs))])
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["image", "coder", "budget_bits", "psnr_db", "mse", "cr", "entropy_bits"]
    assert rows[0]["psnr_db"] == "inf" and rows[0]["mse"] == "0.0"
    assert float(rows[1]["entropy_bits"]) == 0.0
    assert len(rows) == 2
