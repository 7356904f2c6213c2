"""Median histogram matching: per-channel CMY transfer curves.

A curve for one training pair is built by matching the damaged image's
channel quantiles to the reference image's quantiles at the same
probabilities, pinning the ends to (0, 0) and (1, 1) and interpolating
linearly in between.  Curves from many pairs are combined by a pointwise
median on a shared uniform grid.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .histogram import CHANNELS, DEFAULT_QUANTILES, channel_index, quantiles
from .image import ImageBuffer, max_code

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_GRID = 255


class DegenerateChannelWarning(UserWarning):
    """A training channel held a single intensity value."""


class TransformDocumentError(ValueError):
    """Base class for unreadable transform documents."""


class MalformedDocumentError(TransformDocumentError):
    """The document is not valid JSON or misses required fields."""


class UnsupportedVersionError(TransformDocumentError):
    pass


class InvariantViolationError(TransformDocumentError):
    """Curve values break the endpoint, range or monotonicity constraints."""


def uniform_grid(G):
    if G < 2:
        raise ValueError("grid must have at least 2 intervals")
    return np.linspace(0.0, 1.0, G + 1)


def check_curve(y):
    """Raise :class:`InvariantViolationError` unless ``y`` is a valid curve."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) < 3:
        raise InvariantViolationError("a curve needs at least 3 grid values")
    if not np.all(np.isfinite(y)):
        raise InvariantViolationError("curve values must be finite")
    if y[0] != 0.0 or y[-1] != 1.0:
        raise InvariantViolationError("curve must start at 0 and end at 1")
    if np.any(np.diff(y) < 0):
        raise InvariantViolationError("curve values must be non-decreasing")
    if y.min() < 0.0 or y.max() > 1.0:
        raise InvariantViolationError("curve values must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class ChannelTransform:
    """Monotone piecewise-linear map of [0, 1] onto itself on a uniform grid."""

    channel: str
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64)
        check_curve(y)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "channel", CHANNELS[channel_index(self.channel)])

    def __eq__(self, other):
        if not isinstance(other, ChannelTransform):
            return NotImplemented
        return self.channel == other.channel and np.array_equal(self.y, other.y)

    __hash__ = None

    @property
    def G(self):
        return len(self.y) - 1

    @property
    def x(self):
        return uniform_grid(self.G)

    @classmethod
    def identity(cls, channel, G=DEFAULT_GRID):
        return cls(channel, uniform_grid(G))

    @classmethod
    def from_function(cls, channel, fn, G=DEFAULT_GRID):
        """Sample a monotone ``fn`` with ``fn(0) = 0``, ``fn(1) = 1`` on the grid."""
        x = uniform_grid(G)
        y = np.asarray(fn(x), dtype=np.float64)
        return cls(channel, y)

    def evaluate(self, x):
        """Value of the curve at ``x``; ``x`` outside [0, 1] is an error."""
        arr = np.asarray(x, dtype=np.float64)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("transform input must lie in [0, 1]")
        out = self._interp(arr)
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def lookup(self, x):
        """Like :meth:`evaluate` but clamps ``x`` into [0, 1] first."""
        return self._interp(np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0))

    def _interp(self, x):
        return np.interp(x, self.x, self.y)


@dataclass(frozen=True, eq=False)
class TransformSet:
    cyan: ChannelTransform
    magenta: ChannelTransform
    yellow: ChannelTransform
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.cyan.G == self.magenta.G == self.yellow.G):
            raise ValueError("all channels must share one grid")
        for name, t in zip(CHANNELS, self.channels):
            if t.channel != name:
                raise ValueError(f"{name} slot holds a {t.channel} transform")

    def __eq__(self, other):
        if not isinstance(other, TransformSet):
            return NotImplemented
        return self.channels == other.channels and self.metadata == other.metadata

    __hash__ = None

    @property
    def channels(self):
        return (self.cyan, self.magenta, self.yellow)

    @property
    def G(self):
        return self.cyan.G

    def __getitem__(self, channel):
        return self.channels[channel_index(channel)]

    @classmethod
    def identity(cls, G=DEFAULT_GRID, metadata=None):
        return cls(*(ChannelTransform.identity(c, G) for c in CHANNELS),
                   metadata=dict(metadata or {"source": "identity"}))

    @classmethod
    def from_curves(cls, curves, G=DEFAULT_GRID, metadata=None):
        """Build from three callables or three y-arrays in C, M, Y order."""
        out = []
        for name, c in zip(CHANNELS, curves):
            if callable(c):
                out.append(ChannelTransform.from_function(name, c, G))
            else:
                out.append(ChannelTransform(name, c))
        return cls(*out, metadata=dict(metadata or {}))

    def with_metadata(self, **extra):
        return TransformSet(*self.channels, metadata={**self.metadata, **extra})


def timestamp(created=None):
    if created is None:
        created = datetime.now(timezone.utc)
    return created.astimezone(timezone.utc).isoformat(timespec="seconds")


def match_points(damaged_q, reference_q):
    """Collapse matched quantile pairs into a pinned, strictly increasing graph.

    Repeated damaged values get the mean of their reference values; the
    points at 0 and 1 are replaced by the pinned endpoints.
    """
    dq = np.asarray(damaged_q, dtype=np.float64)
    rq = np.asarray(reference_q, dtype=np.float64)
    xs, start = np.unique(dq, return_index=True)
    sums = np.add.reduceat(rq, start)
    counts = np.diff(np.append(start, len(rq)))
    ys = sums / counts
    interior = (xs > 0.0) & (xs < 1.0)
    xs = np.concatenate([[0.0], xs[interior], [1.0]])
    ys = np.concatenate([[0.0], ys[interior], [1.0]])
    return xs, ys


def estimate_channel(damaged, reference, channel, K=DEFAULT_QUANTILES, G=DEFAULT_GRID):
    dq = quantiles(damaged, channel, K).values
    rq = quantiles(reference, channel, K).values
    name = CHANNELS[channel_index(channel)]
    if dq[0] == dq[-1]:
        warnings.warn(
            f"{name} channel of the damaged image is constant ({dq[0]:.4g}); "
            "curve uses a single matched point",
            DegenerateChannelWarning, stacklevel=3,
        )
    xs, ys = match_points(dq, rq)
    y = np.interp(uniform_grid(G), xs, ys)
    y = np.clip(np.maximum.accumulate(y), 0.0, 1.0)
    y[0], y[-1] = 0.0, 1.0
    return ChannelTransform(name, y)


def estimate_pair(damaged, reference, K=DEFAULT_QUANTILES, G=DEFAULT_GRID, pair_id=None):
    """Transfer curves mapping ``damaged`` CMY intensities toward ``reference``."""
    if K < 2:
        raise ValueError("K must be at least 2")
    channels = [estimate_channel(damaged, reference, c, K, G) for c in CHANNELS]
    meta = {"source": "pair", "K": K}
    if pair_id is not None:
        meta["pair_id"] = str(pair_id)
    return TransformSet(*channels, metadata=meta)


def aggregate_median(estimates, created=None):
    """Pointwise median of several transform sets sharing a grid.

    Even counts take the mean of the two central values.  The median of
    monotone curves is monotone, so the result is a valid transform.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValueError("need at least one estimate to aggregate")
    G = estimates[0].G
    if any(e.G != G for e in estimates):
        raise ValueError("all estimates must share the same grid")
    if len(estimates) == 1:
        return estimates[0]
    channels = []
    for name in CHANNELS:
        stack = np.stack([e[name].y for e in estimates])
        y = np.median(stack, axis=0)
        y[0], y[-1] = 0.0, 1.0
        channels.append(ChannelTransform(name, y))
    ids = sorted(e.metadata.get("pair_id", "") for e in estimates)
    meta = {"source": f"median-of-{len(estimates)}", "created": timestamp(created)}
    if all(ids):
        meta["pairs"] = ids
    return TransformSet(*channels, metadata=meta)


def channel_luts(ts, bit_depth):
    """Per-channel RGB code lookup tables for integer images."""
    top = max_code(bit_depth)
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    rgb = np.arange(top + 1) / top
    luts = []
    for t in ts.channels:
        out = 1.0 - t.lookup(1.0 - rgb)
        luts.append(np.floor(np.clip(out, 0.0, 1.0) * top + 0.5).astype(dtype))
    return luts


def apply(image, ts, luts=None):
    """Pass each CMY channel of ``image`` through its transfer curve.

    Integer images are re-quantized to their bit depth (round half up);
    ``luts`` may carry tables from :func:`channel_luts` to skip rebuilding
    them for every image in a batch.
    """
    if image.bit_depth is None:
        cmy = image.cmy
        out = np.stack([t.lookup(cmy[..., i]) for i, t in enumerate(ts.channels)], axis=-1)
        return ImageBuffer(np.clip(1.0 - out, 0.0, 1.0), None, image.alpha)
    if luts is None:
        luts = channel_luts(ts, image.bit_depth)
    codes = image.codes()
    out = np.empty_like(codes)
    for i, lut in enumerate(luts):
        out[..., i] = lut[codes[..., i]]
    return ImageBuffer.from_codes(out, image.alpha)


def to_document(ts):
    return {
        "format_version": FORMAT_VERSION,
        "grid_points": ts.G + 1,
        "channels": {t.channel: t.y.tolist() for t in ts.channels},
        "metadata": dict(ts.metadata),
    }


def serialize(ts):
    """JSON text of ``ts``; floats use shortest round-trip repr, so it is lossless."""
    return json.dumps(to_document(ts), indent=2, sort_keys=True) + "\n"


def from_document(doc):
    if not isinstance(doc, dict):
        raise MalformedDocumentError("transform document must be a JSON object")
    if "format_version" not in doc:
        raise MalformedDocumentError("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported format_version {doc['format_version']!r}")
    for key in ("grid_points", "channels"):
        if key not in doc:
            raise MalformedDocumentError(f"missing {key}")
    channels = doc["channels"]
    if not isinstance(channels, dict):
        raise MalformedDocumentError("channels must be an object")
    n = doc["grid_points"]
    if not isinstance(n, int) or n < 3:
        raise MalformedDocumentError("grid_points must be an integer >= 3")
    curves = []
    for name in CHANNELS:
        if name not in channels:
            raise MalformedDocumentError(f"missing channel {name!r}")
        values = channels[name]
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise MalformedDocumentError(f"channel {name!r} must be a list of numbers")
        if len(values) != n:
            raise MalformedDocumentError(
                f"channel {name!r} has {len(values)} values, expected {n}")
        if not all(math.isfinite(v) for v in values):
            raise InvariantViolationError(f"channel {name!r} has non-finite values")
        try:
            curves.append(ChannelTransform(name, values))
        except InvariantViolationError as exc:
            raise InvariantViolationError(f"channel {name!r}: {exc}") from None
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise MalformedDocumentError("metadata must be an object")
    return TransformSet(*curves, metadata=meta)


def deserialize(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"not valid JSON: {exc}") from None
    return from_document(doc)


def save_transform(path, ts):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(ts))


def load_transform(path):
    with open(path, encoding="utf-8") as fh:
        return deserialize(fh.read())
