import pathlib

import numpy as np
import pytest

from fusespiht.pixelio import load_pgm

DATA = pathlib.Path(__file__).parent / "data"
FIXTURE_IMAGES = ("gradient", "disc", "texture")

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=FIXTURE_IMAGES)
def fixture_image(request):
    return request.param, load_pgm(DATA / f"{request.param}.pgm")


def two_texture_mosaic(seed: int = 7, size: int = 128, split: int = 48) -> np.ndarray:
    """Fine low-amplitude noise above ``split``; high-contrast binary texture below.

    The binary texture carries most of the energy but few distinct
    coefficient magnitudes, so the clustering route ranks it below the noise.
    """
    rng = np.random.default_rng(seed)
    img = np.empty((size, size))
    img[:split] = np.clip(np.rint(128 + rng.normal(0, 8, (split, size))), 0, 255)
    img[split:] = np.where(rng.random((size - split, size)) < 0.5, 68, 188)
    return img
