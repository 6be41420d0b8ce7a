import csv
import subprocess
import sys

import numpy as np
import pytest

from fusespiht.cli import run
from fusespiht.pixelio import load_pgm, save_pgm

from conftest import DATA, two_texture_mosaic

TEX = str(DATA / "texture.pgm")
DISC = str(DATA / "disc.pgm")


def test_encode_decode_lossless(tmp_path):
    s, o = tmp_path / "s.rms", tmp_path / "o.pgm"
    assert run(["encode", TEX, "-o", str(s)]) == 0
    assert run(["decode", str(s), "-o", str(o)]) == 0
    assert o.read_bytes() == (DATA / "texture.pgm").read_bytes()


def test_budget_and_metrics(tmp_path):
    s, o, c = tmp_path / "s.rms", tmp_path / "o.pgm", tmp_path / "m.csv"
    assert run(["encode", TEX, "-o", str(s), "--budget-bits", "2048"]) == 0
    assert s.stat().st_size <= 256
    assert run(["decode", str(s), "-o", str(o)]) == 0
    assert run(["metrics", "--orig", TEX, "--decoded", str(o), "--stream", str(s),
                "--csv", str(c)]) == 0
    row = next(csv.DictReader(open(c)))
    assert row["image"] == "texture" and row["coder"] == "spiht"
    assert int(row["budget_bits"]) == 2048
    assert float(row["cr"]) == 4096 / s.stat().st_size


def test_upto_bits(tmp_path):
    s, o = tmp_path / "s.rms", tmp_path / "o.pgm"
    run(["encode", TEX, "-o", str(s)])
    assert run(["decode", str(s), "-o", str(o), "--upto-bits", "300"]) == 0
    assert load_pgm(o).shape == (64, 64)


@pytest.mark.parametrize("extra", [[], ["--mask", "case1", "--u0", "2", "--policy", "any"],
                                   ["--k", "3", "--m", "0.3", "--lambda", "2", "--prefilter"]])
def test_remspiht_round_trip(tmp_path, extra):
    img = tmp_path / "mosaic.pgm"
    save_pgm(two_texture_mosaic(), img)
    s, o = tmp_path / "s.rms", tmp_path / "o.pgm"
    assert run(["encode", str(img), "-o", str(s), "--coder", "remspiht", *extra]) == 0
    assert run(["decode", str(s), "-o", str(o)]) == 0


def test_fuse(tmp_path):
    o = tmp_path / "f.pgm"
    for rule in ("avg", "max", "min", "pca"):
        assert run(["fuse", TEX, DISC, "-o", str(o), "--rule", rule]) == 0
    assert run(["fuse", TEX, TEX, "-o", str(o), "--rule", "pca", "--mode", "float"]) == 0
    assert np.array_equal(load_pgm(o), load_pgm(TEX))


def test_fuse_crops_to_common_size(tmp_path):
    big = tmp_path / "big.pgm"
    save_pgm(np.zeros((80, 72)), big)
    o = tmp_path / "f.pgm"
    assert run(["fuse", TEX, str(big), "-o", str(o), "--levels", "2"]) == 0
    assert load_pgm(o).shape == (64, 64)


def test_segment(tmp_path):
    img = tmp_path / "mosaic.pgm"
    save_pgm(two_texture_mosaic(), img)
    lab, c = tmp_path / "l.pgm", tmp_path / "c.csv"
    assert run(["segment", str(img), "-o", str(lab), "--csv", str(c)]) == 0
    assert set(np.unique(load_pgm(lab))) == {0, 255}
    rows = list(csv.DictReader(open(c)))
    assert [r["cluster_id"] for r in rows] == ["0", "1"]


@pytest.mark.parametrize("argv", [
    [], ["encode"], ["encode", TEX, "-o", "x", "--scale-shift", "3"],
    ["encode", TEX, "-o", "x", "--coder", "remspiht", "--mask", "case1", "--k", "3"],
    ["encode", TEX, "-o", "x", "--coder", "remspiht", "--u0", "2"],
    ["encode", TEX, "-o", "x", "--budget-bits", "-1"], ["fuse", TEX, DISC, "-o", "x", "--rule", "median"],
    ["bogus"],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert run(argv) == 1
    assert capsys.readouterr().err


def test_processing_errors(tmp_path, capsys):
    assert run(["encode", str(tmp_path / "missing.pgm"), "-o", str(tmp_path / "s")]) == 2
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n1 1\n255\n0\n")
    assert run(["encode", str(bad), "-o", str(tmp_path / "s")]) == 2
    assert run(["encode", str(DATA / "tiny.pgm"), "-o", str(tmp_path / "s")]) == 2
    assert run(["encode", TEX, "-o", str(tmp_path / "s"), "--budget-bits", "40"]) == 2
    junk = tmp_path / "junk.rms"
    junk.write_bytes(b"nonsense" * 4)
    assert run(["decode", str(junk), "-o", str(tmp_path / "o.pgm")]) == 2
    assert "fusespiht" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fusespiht", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "encode" in proc.stdout
