import numpy as np
import pytest
from hypothesis import given, strategies as st
from skimage import color as skcolor

from mhmatch import colorspace as cs

unit = st.floats(0.0, 1.0, allow_nan=False)
triples = st.tuples(unit, unit, unit)


@pytest.mark.parametrize("rgb, cmy", [
    ((1, 1, 1), (0, 0, 0)),
    ((0, 0, 0), (1, 1, 1)),
    ((0.4, 0.7, 0.1), (0.6, 0.3, 0.9)),
])
def test_rgb_to_cmy(rgb, cmy):
    np.testing.assert_allclose(cs.rgb_to_cmy(rgb), cmy, atol=1e-15)


@pytest.mark.parametrize("cmy, rgb", [((0, 0, 0), (1, 1, 1)), ((0.25, 0.5, 0.75), (0.75, 0.5, 0.25))])
def test_cmy_to_rgb(cmy, rgb):
    np.testing.assert_array_equal(cs.cmy_to_rgb(cmy), rgb)


@given(triples)
def test_cmy_round_trip_exact(p):
    # exact for dyadic-friendly values; for general floats 1-(1-x) may lose an ulp
    p = np.round(np.asarray(p) * 1024) / 1024
    np.testing.assert_array_equal(cs.cmy_to_rgb(cs.rgb_to_cmy(p)), p)


def test_white_and_black():
    np.testing.assert_allclose(cs.rgb_to_lab((1, 1, 1)), (100, 0, 0), atol=1e-3)
    np.testing.assert_allclose(cs.rgb_to_luv((1, 1, 1)), (100, 0, 0), atol=1e-3)
    np.testing.assert_allclose(cs.rgb_to_lab((0, 0, 0)), (0, 0, 0), atol=1e-12)
    np.testing.assert_allclose(cs.rgb_to_luv((0, 0, 0)), (0, 0, 0), atol=1e-12)


# Published sRGB/D65 values (Lindbloom calculator), also cross-checked
# against scikit-image below.
def test_red_lab_reference_value():
    np.testing.assert_allclose(cs.rgb_to_lab((1, 0, 0)), (53.2408, 80.0925, 67.2032), atol=5e-3)


def test_green_luv_reference_value():
    np.testing.assert_allclose(cs.rgb_to_luv((0, 1, 0)), (87.7347, -83.0775, 107.3985), atol=5e-3)


@given(triples)
def test_matches_scikit_image(p):
    arr = np.asarray(p, dtype=np.float64).reshape(1, 1, 3)
    np.testing.assert_allclose(cs.rgb_to_lab(p), skcolor.rgb2lab(arr)[0, 0], atol=0.02)
    np.testing.assert_allclose(cs.rgb_to_luv(p), skcolor.rgb2luv(arr)[0, 0], atol=0.02)


def test_grayscale_lightness_strictly_increasing():
    t = np.linspace(0, 1, 256)
    L = cs.rgb_to_lab(np.stack([t, t, t], axis=-1))[:, 0]
    assert np.all(np.diff(L) > 0)


@given(triples)
def test_lab_round_trip(p):
    # the two sRGB branches miss each other by ~3e-8 at the knee
    np.testing.assert_allclose(cs.lab_to_rgb(cs.rgb_to_lab(p)), p, atol=1e-7)


def test_pure_and_vectorized_agree():
    rgb = np.random.default_rng(0).random((5, 7, 3))
    whole = cs.rgb_to_luv(rgb)
    one = cs.rgb_to_luv(rgb[2, 3])
    np.testing.assert_array_equal(whole[2, 3], one)
    np.testing.assert_array_equal(cs.rgb_to_luv(rgb), whole)


def test_chromatic_spaces_drop_lightness():
    p = (0.3, 0.6, 0.2)
    np.testing.assert_array_equal(cs.to_space(p, "AB"), cs.rgb_to_lab(p)[1:])
    np.testing.assert_array_equal(cs.to_space(p, "uv"), cs.rgb_to_luv(p)[1:])
    with pytest.raises(ValueError):
        cs.to_space(p, "HSV")


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        cs.rgb_to_lab((0.1, 0.2))
