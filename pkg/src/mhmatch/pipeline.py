"""Batch orchestration: pair ingestion, learning, restoration and reports."""

from __future__ import annotations

import csv
import json
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import curves as curve_export
from .evaluation import comparison_report, loo_cv
from .histogram import DEFAULT_BINS, DEFAULT_QUANTILES
from .image import SUPPORTED_SUFFIXES, read_image, write_image
from .synthetic import degrade, ground_truth, random_jitters
from .transfer import (
    DEFAULT_GRID,
    aggregate_median,
    apply,
    channel_luts,
    estimate_pair,
    save_transform,
    timestamp,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "MHM_WORKERS"
OVERWRITE_POLICIES = ("skip", "overwrite", "error")


class ConfigError(ValueError):
    """Invalid job configuration or inputs; maps to exit status 2."""


class ManifestError(ConfigError):
    pass


class LearnError(RuntimeError):
    """Too few training pairs could be decoded."""


def default_workers():
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class JobConfig:
    K: int = DEFAULT_QUANTILES
    G: int = DEFAULT_GRID
    B: int = DEFAULT_BINS
    workers: int = 1
    output_dir: str | None = None
    overwrite: str = "skip"
    report_format: str = "text"
    density_source: str = "damaged"
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError("K must be >= 2")
        if self.G < 2:
            raise ConfigError("G must be >= 2")
        if self.B < 1:
            raise ConfigError("B must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.overwrite not in OVERWRITE_POLICIES:
            raise ConfigError(f"overwrite must be one of {OVERWRITE_POLICIES}")
        if self.report_format not in ("text", "json", "both"):
            raise ConfigError("report_format must be text, json or both")
        if self.density_source not in ("damaged", "reference"):
            raise ConfigError("density_source must be damaged or reference")

    @classmethod
    def load(cls, path=None, **overrides):
        """Defaults, then the environment, then a JSON config file, then ``overrides``."""
        values = {"workers": default_workers()}
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            values.update(data)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class Pair:
    id: str
    damaged: Path
    reference: Path


@dataclass
class PairManifest:
    pairs: list
    unmatched: list = field(default_factory=list)

    def __post_init__(self):
        ids = [p.id for p in self.pairs]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate pair ids in manifest")
        missing = [str(path) for p in self.pairs for path in (p.damaged, p.reference)
                   if not Path(path).exists()]
        if missing:
            raise ManifestError(f"missing files: {missing}")

    @property
    def ids(self):
        return [p.id for p in self.pairs]

    def __len__(self):
        return len(self.pairs)


def image_files(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)


def _by_stem(files, label):
    out = {}
    for f in files:
        if f.stem in out:
            raise ManifestError(f"two {label} files share the stem {f.stem!r}")
        out[f.stem] = f
    return out


def ingest(damaged_dir=None, reference_dir=None, manifest_path=None):
    """Pair damaged and reference images by file stem, or read a CSV manifest.

    The manifest has columns ``damaged,reference`` and an optional ``id``;
    relative paths resolve against the manifest's directory.  Pairs are
    always returned sorted by id.
    """
    if manifest_path is not None:
        pairs = _read_manifest(manifest_path)
        unmatched = []
    else:
        if damaged_dir is None or reference_dir is None:
            raise ConfigError("need both damaged and reference directories, or a manifest")
        dmg = _by_stem(image_files(damaged_dir), "damaged")
        ref = _by_stem(image_files(reference_dir), "reference")
        pairs = [Pair(s, dmg[s], ref[s]) for s in sorted(dmg.keys() & ref.keys())]
        unmatched = sorted([str(dmg[s]) for s in dmg.keys() - ref.keys()]
                           + [str(ref[s]) for s in ref.keys() - dmg.keys()])
        for path in unmatched:
            log.warning("no partner for %s", path)
    if not pairs:
        raise ManifestError("no matched image pairs")
    return PairManifest(sorted(pairs, key=lambda p: p.id), unmatched)


def _read_manifest(path):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    base = path.parent
    pairs = []
    for n, row in enumerate(rows, start=2):
        try:
            d, r = row["damaged"], row["reference"]
        except KeyError:
            raise ManifestError(f"{path}: need 'damaged' and 'reference' columns") from None
        if not d or not r:
            raise ManifestError(f"{path}:{n}: empty path")
        d, r = base / d, base / r
        pid = (row.get("id") or "").strip() or d.stem
        pairs.append(Pair(pid, d, r))
    return pairs


def write_manifest(path, manifest):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "damaged", "reference"])
        for p in manifest.pairs:
            writer.writerow([p.id, str(Path(p.damaged).resolve()), str(Path(p.reference).resolve())])


def _pool_map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_pairs(manifest, workers=1):
    """Decode every pair; returns ``(loaded, failures)`` with failures as (id, message)."""
    def load(pair):
        try:
            return pair.id, (read_image(pair.damaged), read_image(pair.reference)), None
        except OSError as exc:
            return pair.id, None, str(exc)

    loaded, failures = [], []
    for pid, images, err in _pool_map(load, manifest.pairs, workers):
        if err is None:
            loaded.append((pid, images))
        else:
            log.error("pair %s: %s", pid, err)
            failures.append((pid, err))
    return loaded, failures


@dataclass
class LearnResult:
    transform: object
    estimates: list
    failures: list
    paths: dict = field(default_factory=dict)


def learn(manifest, config, out_dir=None, created=None):
    """Estimate one curve set per pair, take the median and write the outputs.

    Writes ``transform.json``, ``estimates/<id>.json``, ``curve_<channel>.csv``
    and ``curves.svg`` when ``out_dir`` (or ``config.output_dir``) is set.
    """
    loaded, failures = load_pairs(manifest, config.workers)
    if len(loaded) < 2:
        raise LearnError(f"only {len(loaded)} pair(s) decoded; need at least 2")

    def estimate(item):
        pid, (damaged, reference) = item
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ts = estimate_pair(damaged, reference, config.K, config.G, pair_id=pid)
        for w in caught:
            log.warning("pair %s: %s", pid, w.message)
        return ts

    estimates = _pool_map(estimate, loaded, config.workers)
    for ts in estimates:
        dev = max(float(np.max(np.abs(t.y - t.x))) for t in ts.channels)
        log.info("pair %s: max deviation from identity %.4f", ts.metadata["pair_id"], dev)
    median = aggregate_median(estimates, created=created)
    result = LearnResult(median, estimates, failures)

    out_dir = out_dir or config.output_dir
    if out_dir is not None:
        out = Path(out_dir)
        (out / "estimates").mkdir(parents=True, exist_ok=True)
        result.paths["transform"] = out / "transform.json"
        save_transform(result.paths["transform"], median)
        for ts in estimates:
            save_transform(out / "estimates" / f"{ts.metadata['pair_id']}.json", ts)
        result.paths["csv"] = curve_export.write_curve_csvs(median, out)
        result.paths["svg"] = out / "curves.svg"
        curve_export.write_svg(result.paths["svg"], median, estimates)
    return result


@dataclass
class BatchResult:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def apply_batch(inputs, ts, out_dir, workers=1, overwrite="skip"):
    """Restore each input image and write it under ``out_dir`` with the same name."""
    if overwrite not in OVERWRITE_POLICIES:
        raise ConfigError(f"overwrite must be one of {OVERWRITE_POLICIES}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    luts = {8: channel_luts(ts, 8), 16: channel_luts(ts, 16)}
    inputs = [Path(p) for p in inputs]
    names = [p.name for p in inputs]
    if len(set(names)) != len(names):
        raise ConfigError("input files must have distinct names")

    def work(path):
        target = out_dir / path.name
        if target.exists():
            if overwrite == "skip":
                return "skipped", path, None
            if overwrite == "error":
                return "failed", path, f"{target} exists"
        try:
            image = read_image(path)
            write_image(target, apply(image, ts, luts[image.bit_depth]))
        except OSError as exc:
            return "failed", path, str(exc)
        return "written", target, None

    result = BatchResult()
    for status, path, err in _pool_map(work, inputs, workers):
        if status == "written":
            result.written.append(path)
        elif status == "skipped":
            result.skipped.append(path)
        else:
            log.error("%s: %s", path, err)
            result.failures.append((str(path), err))
    return result


def evaluate_loo(manifest, config):
    loaded, failures = load_pairs(manifest, config.workers)
    if len(loaded) < 2:
        raise LearnError(f"only {len(loaded)} pair(s) decoded; need at least 2")
    ids = [pid for pid, _ in loaded]
    report = loo_cv([images for _, images in loaded], config.K, config.G, config.B,
                    ids=ids, density_source=config.density_source, workers=config.workers)
    return report, failures


def evaluate_compare(originals_dir, edited_dir, ts, workers=1):
    """Pixel distances of originals and restored originals to manual edits.

    Images pair up by stem; pairs with mismatched sizes or decode errors
    are reported as failures and left out.
    """
    orig = _by_stem(image_files(originals_dir), "original")
    edit = _by_stem(image_files(edited_dir), "edited")
    stems = sorted(orig.keys() & edit.keys())
    if not stems:
        raise ManifestError("no originals match an edited image")

    def load(stem):
        try:
            o, e = read_image(orig[stem]), read_image(edit[stem])
        except OSError as exc:
            return stem, None, str(exc)
        if o.shape != e.shape:
            return stem, None, f"size mismatch {o.shape} vs {e.shape}"
        return stem, (o, e, apply(o, ts)), None

    triples, ids, failures = [], [], []
    for stem, t, err in _pool_map(load, stems, workers):
        if err is None:
            ids.append(stem)
            triples.append(t)
        else:
            log.error("%s: %s", stem, err)
            failures.append((stem, err))
    if not triples:
        raise LearnError("no comparable image triples")
    report = comparison_report([t[1] for t in triples], [t[0] for t in triples],
                               [t[2] for t in triples], ids=ids)
    return report, failures


def synthesize(clean_dir, curves, out_dir, config, noise=0.0, created=None):
    """Write degraded copies of every clean image plus the ground-truth transform.

    ``noise`` adds a seeded per-image, per-channel jitter to the
    degradation exponent; the ground truth is always the un-jittered curve.
    """
    files = image_files(clean_dir)
    if not files:
        raise ConfigError(f"no supported images in {clean_dir}")
    out = Path(out_dir)
    (out / "damaged").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    jitters = [random_jitters(rng, noise) for _ in files]
    result = BatchResult()

    def work(item):
        path, jit = item
        try:
            write_image(out / "damaged" / path.name, degrade(read_image(path), curves, jit))
        except OSError as exc:
            return path, str(exc)
        return path, None

    for path, err in _pool_map(work, zip(files, jitters), config.workers):
        if err is None:
            result.written.append(out / "damaged" / path.name)
        else:
            result.failures.append((str(path), err))
    truth = ground_truth(curves, config.G, {
        "source": "synthetic-ground-truth",
        "created": timestamp(created),
        "noise": noise,
        "seed": config.seed,
    })
    save_transform(out / "ground_truth.json", truth)
    return truth, result


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
