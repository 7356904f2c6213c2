"""Transform distances, leave-one-out cross-validation and pixel distances."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .colorspace import SPACES, to_space
from .histogram import CHANNELS, DEFAULT_BINS, DEFAULT_QUANTILES, density
from .transfer import DEFAULT_GRID, TransformSet, aggregate_median, estimate_pair

REPORT_SCALE = 100.0
METHODS = ("identity", "loo_median")
MODES = ("uniform", "weighted")

# fold medians are throwaway; a fixed stamp keeps them reproducible
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def standard_error(values):
    """Sample standard deviation over sqrt(N); NaN when N < 2."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return float("nan")
    return float(np.std(v, ddof=1) / np.sqrt(v.size))


def mean_se(values):
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), standard_error(v)


@dataclass(frozen=True)
class TransformDistance:
    """Per-channel integrated squared differences; ``total`` is their sum.

    Values are stored unscaled; ``scaled`` multiplies by ``scale`` for
    reporting.
    """

    components: tuple
    mode: str = "uniform"
    scale: float = REPORT_SCALE

    @property
    def total(self):
        return float(sum(self.components))

    @property
    def scaled(self):
        return self.total * self.scale

    @property
    def scaled_components(self):
        return tuple(c * self.scale for c in self.components)


def _node_masses(x, profile):
    """Density mass in each node's half-way cell; equals trapezoid weights when uniform."""
    mids = (x[1:] + x[:-1]) / 2.0
    lo = np.concatenate([[0.0], mids])
    hi = np.concatenate([mids, [1.0]])
    return profile.cdf(hi) - profile.cdf(lo)


def channel_distance(f, g, profile=None):
    """Integral over [0, 1] of ``(f - g)**2``, trapezoid rule on the union grid.

    With ``profile`` the integrand is weighted by that channel's intensity
    density, normalized to unit mass.
    """
    x = np.union1d(f.x, g.x)
    h = (f.lookup(x) - g.lookup(x)) ** 2
    if profile is None:
        return float(np.sum((h[1:] + h[:-1]) * np.diff(x)) / 2.0)
    w = _node_masses(x, profile)
    total = w.sum()
    if total <= 0:
        raise ValueError("density profile has no mass")
    return float(np.dot(w, h) / total)


def transform_distance(f, g, weighting=None):
    """Sum over C, M, Y of the integrated squared curve differences.

    ``weighting`` is ``None`` for the uniform metric or a sequence of three
    :class:`~mhmatch.histogram.DensityProfile` (C, M, Y order).
    """
    if weighting is None:
        comps = tuple(channel_distance(a, b) for a, b in zip(f.channels, g.channels))
        return TransformDistance(comps, "uniform")
    weighting = tuple(weighting)
    if len(weighting) != 3:
        raise ValueError("weighted distance needs one density profile per channel")
    for name, p in zip(CHANNELS, weighting):
        if p.channel != name:
            raise ValueError(f"density for {p.channel} given in the {name} slot")
    comps = tuple(
        channel_distance(a, b, p) for a, b, p in zip(f.channels, g.channels, weighting)
    )
    return TransformDistance(comps, "weighted")


@dataclass
class EvalReport:
    """Leave-one-out errors per image for the identity and median estimators.

    ``errors[(method, mode)]`` holds unscaled distances aligned with ``ids``.
    """

    ids: list
    errors: dict
    scale: float = REPORT_SCALE

    def summary(self, method, mode):
        return mean_se(np.asarray(self.errors[(method, mode)]) * self.scale)

    def wins(self, mode="uniform"):
        """Images where the leave-one-out median beats the identity."""
        loo = np.asarray(self.errors[("loo_median", mode)])
        ident = np.asarray(self.errors[("identity", mode)])
        return int(np.sum(loo < ident))

    def to_dict(self):
        per_image = []
        for i, pid in enumerate(self.ids):
            row = {"id": pid}
            for (method, mode), vals in sorted(self.errors.items()):
                row[f"{method}_{mode}"] = float(vals[i])
            per_image.append(row)
        summary = {}
        for method in METHODS:
            summary[method] = {}
            for mode in MODES:
                m, se = self.summary(method, mode)
                summary[method][mode] = {"mean": m, "se": se}
        return {
            "scale": self.scale,
            "n_images": len(self.ids),
            "summary": summary,
            "wins": {mode: self.wins(mode) for mode in MODES},
            "per_image": per_image,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    def format_table(self):
        labels = {"identity": "Identity Transformation", "loo_median": "Leave-One-Out Estimator"}
        lines = [f"{'':<26}{'Uniform Error':>18}{'Weighted Error':>18}"]
        for method in METHODS:
            cells = []
            for mode in MODES:
                m, se = self.summary(method, mode)
                cells.append(f"{m:.3f} ± {se:.3f}")
            lines.append(f"{labels[method]:<26}{cells[0]:>18}{cells[1]:>18}")
        n = len(self.ids)
        lines.append("")
        lines.append(f"errors x{self.scale:g}; leave-one-out beats identity on "
                     f"{self.wins('uniform')}/{n} images (uniform), "
                     f"{self.wins('weighted')}/{n} (weighted)")
        return "\n".join(lines) + "\n"


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def loo_cv(pairs, K=DEFAULT_QUANTILES, G=DEFAULT_GRID, B=DEFAULT_BINS, ids=None,
           density_source="damaged", workers=1):
    """Leave-one-out comparison of the median estimator against the identity.

    For each pair ``i`` the median of all other pairs' curves is compared
    with pair ``i``'s own curve, uniformly and weighted by the channel
    densities of pair ``i``'s damaged (or reference) image.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("leave-one-out needs at least 2 pairs")
    if ids is None:
        ids = [str(i) for i in range(len(pairs))]
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise ValueError("pair ids must be unique")
    if density_source not in ("damaged", "reference"):
        raise ValueError("density_source must be 'damaged' or 'reference'")
    # sort by id so results do not depend on input order
    order = sorted(range(len(pairs)), key=lambda i: ids[i])
    ids = [ids[i] for i in order]
    pairs = [pairs[i] for i in order]

    estimates = _map(lambda p: estimate_pair(p[0], p[1], K, G), pairs, workers)
    identity = TransformSet.identity(G)

    def fold(i):
        own = estimates[i]
        rest = aggregate_median(estimates[:i] + estimates[i + 1:], created=_EPOCH)
        src = pairs[i][0 if density_source == "damaged" else 1]
        dens = [density(src, c, B) for c in CHANNELS]
        return {
            ("identity", "uniform"): transform_distance(own, identity).total,
            ("identity", "weighted"): transform_distance(own, identity, dens).total,
            ("loo_median", "uniform"): transform_distance(own, rest).total,
            ("loo_median", "weighted"): transform_distance(own, rest, dens).total,
        }

    rows = _map(fold, range(len(pairs)), workers)
    errors = {key: np.array([r[key] for r in rows]) for key in rows[0]}
    return EvalReport(ids, errors)


def _coords(image, space):
    rgb = image.rgb if hasattr(image, "rgb") else np.asarray(image, dtype=np.float64)
    return to_space(rgb, space)


def pixel_distance(a, b, space="CIELAB"):
    """Mean per-pixel Euclidean distance between two same-sized images in ``space``."""
    sa = a.shape if hasattr(a, "rgb") else np.shape(a)[:-1]
    sb = b.shape if hasattr(b, "rgb") else np.shape(b)[:-1]
    if tuple(sa) != tuple(sb):
        raise ValueError(f"image dimensions differ: {tuple(sa)} vs {tuple(sb)}")
    diff = _coords(a, space) - _coords(b, space)
    return float(np.mean(np.sqrt(np.sum(diff * diff, axis=-1))))


@dataclass
class PixelDistanceReport:
    """Per-image mean pixel distances to the reference edits.

    ``distances[(method, space)]`` with method ``identity`` (original vs
    edit) or ``corrected`` (corrected vs edit).
    """

    ids: list
    distances: dict = field(default_factory=dict)

    def summary(self, method, space):
        return mean_se(self.distances[(method, space)])

    def wins(self, space):
        c = np.asarray(self.distances[("corrected", space)])
        i = np.asarray(self.distances[("identity", space)])
        return int(np.sum(c < i))

    def to_dict(self):
        summary = {
            method: {s: dict(zip(("mean", "se"), self.summary(method, s))) for s in SPACES}
            for method in ("identity", "corrected")
        }
        per_image = []
        for k, pid in enumerate(self.ids):
            row = {"id": pid}
            for (method, space), vals in sorted(self.distances.items()):
                row[f"{method}_{space}"] = float(vals[k])
            per_image.append(row)
        return {"n_images": len(self.ids), "summary": summary,
                "wins": {s: self.wins(s) for s in SPACES}, "per_image": per_image}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self):
        labels = {"identity": "Identity Transformation", "corrected": "Median Estimator"}
        lines = [f"{'Color Space':<26}" + "".join(f"{s:>18}" for s in SPACES)]
        for method in ("identity", "corrected"):
            cells = "".join(
                f"{'%.2f ± %.2f' % self.summary(method, s):>18}" for s in SPACES)
            lines.append(f"{labels[method]:<26}{cells}")
        return "\n".join(lines) + "\n"


def comparison_report(reference_edits, originals, corrected, ids=None):
    reference_edits, originals, corrected = map(list, (reference_edits, originals, corrected))
    n = len(reference_edits)
    if not (len(originals) == len(corrected) == n):
        raise ValueError("reference, original and corrected lists must align")
    if n == 0:
        raise ValueError("no images to compare")
    ids = [str(i) for i in (ids if ids is not None else range(n))]
    report = PixelDistanceReport(ids)
    for space in SPACES:
        report.distances[("identity", space)] = np.array(
            [pixel_distance(o, r, space) for o, r in zip(originals, reference_edits)])
        report.distances[("corrected", space)] = np.array(
            [pixel_distance(c, r, space) for c, r in zip(corrected, reference_edits)])
    return report
