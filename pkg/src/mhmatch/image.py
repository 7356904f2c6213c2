"""Decoded rasters with intensities normalized to [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff")
JPEG_QUALITY = 95


class ImageDecodeError(OSError):
    """The file could not be read as a supported raster."""


class EmptyImageError(ValueError):
    """The image holds no pixel data."""


@dataclass(frozen=True)
class ImageBuffer:
    """RGB raster with float64 intensities in [0, 1].

    ``bit_depth`` is 8 or 16 for images that came from (or will go to) an
    integer file and ``None`` for purely floating-point synthetic data.
    ``alpha`` keeps the original alpha codes untouched.
    """

    rgb: np.ndarray
    bit_depth: int | None = 8
    alpha: np.ndarray | None = None

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float64)
        if rgb.ndim == 2 and rgb.shape[-1] == 3:
            rgb = rgb[np.newaxis]
        if rgb.ndim != 3 or rgb.shape[-1] != 3:
            raise ValueError(f"rgb must have shape (H, W, 3), got {rgb.shape}")
        if rgb.size and (rgb.min() < 0.0 or rgb.max() > 1.0):
            raise ValueError("rgb intensities must lie in [0, 1]")
        if self.bit_depth not in (8, 16, None):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        rgb.setflags(write=False)
        object.__setattr__(self, "rgb", rgb)

    @classmethod
    def from_codes(cls, codes, alpha=None):
        """Build from an integer ``(H, W, 3)`` array of uint8 or uint16 codes."""
        codes = np.asarray(codes)
        if codes.dtype == np.uint8:
            depth = 8
        elif codes.dtype == np.uint16:
            depth = 16
        else:
            raise ValueError(f"codes must be uint8 or uint16, got {codes.dtype}")
        return cls(codes / float(max_code(depth)), depth, alpha)

    @property
    def shape(self):
        return self.rgb.shape[:2]

    @property
    def n_pixels(self):
        return self.rgb.shape[0] * self.rgb.shape[1]

    @property
    def cmy(self):
        return 1.0 - self.rgb

    def channel(self, index):
        """Flat CMY intensities of channel ``index`` (0 cyan, 1 magenta, 2 yellow)."""
        if self.n_pixels == 0:
            raise EmptyImageError("image has no pixel data")
        return 1.0 - self.rgb[..., index].ravel()

    def codes(self):
        """Integer codes at the buffer's bit depth, rounding half up."""
        depth = self.bit_depth or 8
        dtype = np.uint8 if depth == 8 else np.uint16
        return np.floor(self.rgb * max_code(depth) + 0.5).astype(dtype)


def max_code(bit_depth):
    return (1 << bit_depth) - 1


def read_image(path):
    path = Path(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageDecodeError(f"cannot decode {path}")
    if raw.dtype not in (np.uint8, np.uint16):
        raise ImageDecodeError(f"{path}: unsupported sample type {raw.dtype}")
    alpha = None
    if raw.ndim == 2:
        rgb = np.repeat(raw[..., np.newaxis], 3, axis=-1)
    elif raw.shape[-1] == 4:
        rgb = raw[..., 2::-1]
        alpha = raw[..., 3].copy()
    elif raw.shape[-1] == 3:
        rgb = raw[..., ::-1]
    else:
        raise ImageDecodeError(f"{path}: unsupported channel count {raw.shape[-1]}")
    return ImageBuffer.from_codes(np.ascontiguousarray(rgb), alpha)


def write_image(path, image):
    """Encode ``image`` at its bit depth; the format follows the suffix."""
    path = Path(path)
    codes = image.codes()
    bgr = codes[..., ::-1]
    if image.alpha is not None:
        bgr = np.dstack([bgr, image.alpha.astype(codes.dtype)])
    params = []
    suffix = path.suffix.lower()
    if suffix in (".jpg", ".jpeg"):
        if codes.dtype != np.uint8:
            bgr = (bgr >> 8).astype(np.uint8)
        params = [cv2.IMWRITE_JPEG_QUALITY, JPEG_QUALITY]
    if not cv2.imwrite(str(path), np.ascontiguousarray(bgr), params):
        raise OSError(f"cannot write {path}")
