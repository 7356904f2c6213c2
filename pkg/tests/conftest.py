import numpy as np
import pytest

from mhmatch.image import ImageBuffer, write_image
from mhmatch.synthetic import DegradationCurve, degrade, random_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def red_shift():
    """Cyan fades fastest, magenta and yellow only slightly."""
    return (DegradationCurve(gamma=1.8), DegradationCurve(gamma=1.15), DegradationCurve(gamma=1.1))


def float_image(values):
    """Image whose CMY channels all hold ``values`` (a flat sequence)."""
    v = np.asarray(values, dtype=np.float64)
    rgb = np.repeat((1.0 - v)[np.newaxis, :, np.newaxis], 3, axis=-1)
    return ImageBuffer(rgb, None)


@pytest.fixture
def pair_dirs(tmp_path, red_shift):
    """Six synthetic damaged/reference PNG pairs on disk."""
    rng = np.random.default_rng(7)
    dmg, ref = tmp_path / "damaged", tmp_path / "reference"
    dmg.mkdir()
    ref.mkdir()
    for i in range(6):
        clean = random_scene(rng, (40, 48))
        write_image(ref / f"img{i}.png", clean)
        write_image(dmg / f"img{i}.png", degrade(clean, red_shift))
    return dmg, ref
