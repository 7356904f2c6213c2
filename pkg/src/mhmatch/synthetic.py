"""Synthetic scenes and monotone CMY degradations for closed-loop checks."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .histogram import CHANNELS
from .image import ImageBuffer
from .transfer import DEFAULT_GRID, TransformSet, uniform_grid


class CurveSpecError(ValueError):
    pass


@dataclass(frozen=True)
class DegradationCurve:
    """Strictly increasing map of clean dye intensity to damaged intensity.

    Defined either by an exponent (``x ** gamma``) or by interior knots of a
    piecewise-linear curve through (0, 0) and (1, 1).
    """

    gamma: float | None = None
    knots: tuple = ()

    def __post_init__(self):
        if self.gamma is not None:
            if not np.isfinite(self.gamma) or self.gamma <= 0:
                raise CurveSpecError(f"gamma must be positive, got {self.gamma}")
            return
        xs, ys = self._nodes()
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise CurveSpecError("curve knots must be strictly increasing in x and y")
        if xs.min() < 0 or xs.max() > 1 or ys.min() < 0 or ys.max() > 1:
            raise CurveSpecError("curve knots must lie in [0, 1]")

    def _nodes(self):
        xs = np.array([0.0] + [k[0] for k in self.knots] + [1.0])
        ys = np.array([0.0] + [k[1] for k in self.knots] + [1.0])
        return xs, ys

    @property
    def is_identity(self):
        return (self.gamma == 1.0) or (self.gamma is None and not self.knots)

    def forward(self, x, jitter=1.0):
        """Degrade ``x``; ``jitter`` is an extra exponent for per-image variation."""
        x = np.asarray(x, dtype=np.float64)
        if self.gamma is not None:
            y = x ** (self.gamma * jitter)
        else:
            xs, ys = self._nodes()
            y = np.interp(x, xs, ys)
            if jitter != 1.0:
                y = y ** jitter
        return y

    def inverse(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.gamma is not None:
            return y ** (1.0 / self.gamma)
        xs, ys = self._nodes()
        return np.interp(y, ys, xs)


def parse_curve(text):
    """Parse ``identity``, ``gamma:1.6`` or ``points:0.3=0.2,0.7=0.6``."""
    text = text.strip().lower()
    if text in ("identity", "id", "none"):
        return DegradationCurve(gamma=1.0)
    m = re.fullmatch(r"gamma:([0-9eE.+-]+)", text)
    if m:
        try:
            return DegradationCurve(gamma=float(m.group(1)))
        except ValueError:
            raise CurveSpecError(f"bad gamma in {text!r}") from None
    if text.startswith("points:"):
        knots = []
        for item in filter(None, text[len("points:"):].split(",")):
            try:
                x, y = (float(v) for v in item.split("="))
            except ValueError:
                raise CurveSpecError(f"bad knot {item!r}; expected x=y") from None
            knots.append((x, y))
        return DegradationCurve(knots=tuple(knots))
    raise CurveSpecError(f"unrecognized curve spec {text!r}")


def ground_truth(curves, G=DEFAULT_GRID, metadata=None):
    """Transform that undoes ``curves`` (damaged -> clean), sampled on the grid."""
    x = uniform_grid(G)
    ys = []
    for c in curves:
        y = c.inverse(x)
        y[0], y[-1] = 0.0, 1.0
        ys.append(y)
    return TransformSet.from_curves(ys, G, metadata or {"source": "synthetic-ground-truth"})


def degrade(image, curves, jitters=(1.0, 1.0, 1.0)):
    """Apply the degradation per CMY channel, keeping bit depth and alpha."""
    cmy = image.cmy
    out = np.stack(
        [c.forward(cmy[..., i], j) for i, (c, j) in enumerate(zip(curves, jitters))], axis=-1)
    rgb = np.clip(1.0 - out, 0.0, 1.0)
    if image.bit_depth is not None:
        codes = ImageBuffer(rgb, image.bit_depth).codes()
        return ImageBuffer.from_codes(codes, image.alpha)
    return ImageBuffer(rgb, None, image.alpha)


def random_jitters(rng, noise):
    """Per-channel exponent multipliers, log-uniform in [-noise, noise]."""
    if noise <= 0:
        return (1.0, 1.0, 1.0)
    return tuple(float(v) for v in np.exp(rng.uniform(-noise, noise, size=3)))


def _smooth_field(rng, h, w, n_blobs=6):
    yy, xx = np.mgrid[0:h, 0:w]
    yy = yy / max(h - 1, 1)
    xx = xx / max(w - 1, 1)
    a, b = rng.normal(size=2)
    field = a * xx + b * yy
    for _ in range(n_blobs):
        cy, cx = rng.uniform(0, 1, size=2)
        s = rng.uniform(0.08, 0.4)
        field += rng.normal() * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    return field


def random_scene(rng, shape=(64, 64), bit_depth=8):
    """Smooth random RGB scene whose channels each span the full [0, 1] range."""
    h, w = shape
    base = _smooth_field(rng, h, w)
    chans = []
    for _ in CHANNELS:
        f = base + 0.7 * _smooth_field(rng, h, w) + 0.05 * rng.normal(size=(h, w))
        f = (f - f.min()) / (f.max() - f.min())
        # vary the tonal distribution between scenes
        chans.append(f ** np.exp(rng.normal(scale=0.4)))
    rgb = np.stack(chans, axis=-1)
    if bit_depth is None:
        return ImageBuffer(rgb, None)
    return ImageBuffer.from_codes(ImageBuffer(rgb, bit_depth).codes())
