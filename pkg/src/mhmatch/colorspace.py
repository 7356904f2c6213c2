"""Conversions between normalized sRGB, CMY, XYZ, CIELAB and CIELUV.

All functions accept array-likes whose last axis holds the three color
components, so a single triple, a flat list of pixels and an ``(H, W, 3)``
raster go through the same code path.  RGB values are the gamma-encoded
intensities stored in the image file; linearization only happens inside
:func:`rgb_to_xyz`.
"""

from __future__ import annotations

import numpy as np

# sRGB primaries, D65 (IEC 61966-2-1 at full published precision)
RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)

# White point taken from the matrix itself so that sRGB white is exactly
# achromatic; agrees with the tabulated D65 (0.95047, 1, 1.08883) to 1e-5.
WHITE_XYZ = RGB_TO_XYZ.sum(axis=1)

_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0

SPACES = ("CIELUV", "UV", "CIELAB", "AB")


def _triples(p):
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError(f"expected last axis of length 3, got shape {arr.shape}")
    return arr


def rgb_to_cmy(p):
    """Complement of normalized RGB: the amount of each subtractive dye."""
    return 1.0 - _triples(p)


def cmy_to_rgb(p):
    return 1.0 - _triples(p)


def srgb_to_linear(c):
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c):
    c = np.asarray(c, dtype=np.float64)
    lo = c * 12.92
    hi = 1.055 * np.power(np.maximum(c, 0.0), 1.0 / 2.4) - 0.055
    return np.where(c <= 0.04045 / 12.92, lo, hi)


def rgb_to_xyz(p):
    return srgb_to_linear(_triples(p)) @ RGB_TO_XYZ.T


def xyz_to_rgb(p):
    return linear_to_srgb(_triples(p) @ XYZ_TO_RGB.T)


def _lab_f(t):
    return np.where(t > _EPSILON, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)


def _lab_f_inv(f):
    t = f ** 3
    return np.where(t > _EPSILON, t, (116.0 * f - 16.0) / _KAPPA)


def xyz_to_lab(p):
    xyz = _triples(p) / WHITE_XYZ
    fx, fy, fz = (_lab_f(xyz[..., i]) for i in range(3))
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_xyz(p):
    lab = _triples(p)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1)
    return xyz * WHITE_XYZ


def _uv_prime(xyz):
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    denom = x + 15.0 * y + 3.0 * z
    safe = np.where(denom > 0, denom, 1.0)
    u = np.where(denom > 0, 4.0 * x / safe, 0.0)
    v = np.where(denom > 0, 9.0 * y / safe, 0.0)
    return u, v


def xyz_to_luv(p):
    xyz = _triples(p)
    un, vn = _uv_prime(WHITE_XYZ)
    yr = xyz[..., 1] / WHITE_XYZ[1]
    L = np.where(yr > _EPSILON, 116.0 * np.cbrt(yr) - 16.0, _KAPPA * yr)
    u_p, v_p = _uv_prime(xyz)
    # black has undefined chromaticity; L = 0 zeroes u and v regardless
    return np.stack([L, 13.0 * L * (u_p - un), 13.0 * L * (v_p - vn)], axis=-1)


def rgb_to_lab(p):
    """sRGB (gamma-encoded, [0,1]) to CIELAB under D65."""
    return xyz_to_lab(rgb_to_xyz(p))


def lab_to_rgb(p):
    """Inverse of :func:`rgb_to_lab`.  Out-of-gamut colors are not clipped."""
    return xyz_to_rgb(lab_to_xyz(p))


def rgb_to_luv(p):
    """sRGB (gamma-encoded, [0,1]) to CIELUV under D65."""
    return xyz_to_luv(rgb_to_xyz(p))


def to_space(rgb, space):
    """Coordinates used for distances in ``space``.

    ``UV`` and ``AB`` keep only the chromatic coordinates of CIELUV and
    CIELAB respectively.
    """
    space = space.upper()
    if space == "CIELUV":
        return rgb_to_luv(rgb)
    if space == "UV":
        return rgb_to_luv(rgb)[..., 1:]
    if space == "CIELAB":
        return rgb_to_lab(rgb)
    if space == "AB":
        return rgb_to_lab(rgb)[..., 1:]
    raise ValueError(f"unknown color space {space!r}; expected one of {SPACES}")
