"""Per-channel empirical quantile functions and intensity densities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNELS = ("cyan", "magenta", "yellow")
DEFAULT_QUANTILES = 256
DEFAULT_BINS = 256


def channel_index(channel):
    """Accept ``"C"``, ``"cyan"`` or ``0`` style channel ids."""
    if isinstance(channel, (int, np.integer)):
        if 0 <= channel < 3:
            return int(channel)
    else:
        key = str(channel).lower()
        for i, name in enumerate(CHANNELS):
            if key in (name, name[0]):
                return i
    raise ValueError(f"unknown channel {channel!r}")


@dataclass(frozen=True)
class QuantileProfile:
    channel: str
    probabilities: np.ndarray
    values: np.ndarray

    @property
    def K(self):
        return len(self.values) - 1


@dataclass(frozen=True)
class DensityProfile:
    """Histogram of one channel over ``B`` equal bins on [0, 1], mass summing to 1."""

    channel: str
    masses: np.ndarray

    @property
    def B(self):
        return len(self.masses)

    @property
    def edges(self):
        return np.linspace(0.0, 1.0, self.B + 1)

    @classmethod
    def uniform(cls, channel, B=DEFAULT_BINS):
        return cls(CHANNELS[channel_index(channel)], np.full(B, 1.0 / B))

    def cdf(self, x):
        """Cumulative mass at ``x`` treating each bin as uniformly filled."""
        cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        return np.interp(x, self.edges, cum)


def quantiles(image, channel, K=DEFAULT_QUANTILES):
    """Empirical quantiles of a channel's CMY intensity at probabilities k/K.

    Uses linear interpolation between the closest order statistics (the
    "type 7" rule), so the result depends only on the pixel multiset.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    idx = channel_index(channel)
    values = image.channel(idx)
    probs = np.arange(K + 1) / K
    q = np.quantile(values, probs, method="linear")
    # guard against last-ulp wobble from the interpolation arithmetic
    q = np.clip(np.maximum.accumulate(q), 0.0, 1.0)
    return QuantileProfile(CHANNELS[idx], probs, q)


def density(image, channel, B=DEFAULT_BINS):
    if B < 1:
        raise ValueError("B must be at least 1")
    idx = channel_index(channel)
    values = image.channel(idx)
    counts, _ = np.histogram(values, bins=B, range=(0.0, 1.0))
    return DensityProfile(CHANNELS[idx], counts / counts.sum())
