"""Exit criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import time
from contextlib import contextmanager
from datetime import datetime, timezone

import numpy as np
import pytest

from mhmatch.colorspace import rgb_to_lab, rgb_to_luv
from mhmatch.evaluation import loo_cv, pixel_distance, transform_distance
from mhmatch.image import ImageBuffer, write_image
from mhmatch.pipeline import JobConfig, ingest, learn, write_manifest
from mhmatch.synthetic import (
    DegradationCurve,
    degrade,
    ground_truth,
    random_jitters,
    random_scene,
)
from mhmatch.transfer import (
    ChannelTransform,
    TransformSet,
    aggregate_median,
    deserialize,
    estimate_pair,
    serialize,
)

pytestmark = pytest.mark.acceptance

RED_SHIFT = (DegradationCurve(gamma=1.8), DegradationCurve(gamma=1.15),
             DegradationCurve(gamma=1.1))
CYAN_ONLY = (DegradationCurve(gamma=1.8), DegradationCurve(gamma=1.0),
             DegradationCurve(gamma=1.0))


@contextmanager
def criterion(name, limit_s):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed < limit_s
        status = "PASS" if ok and within else "FAIL"
        print(f"\n[{status}] {name} ({elapsed:.2f}s, limit {limit_s}s)")
    assert elapsed < limit_s, f"{name} took {elapsed:.2f}s"


def test_1_worked_example():
    K = 256
    with criterion("1 worked example: f_cyan(0.6) = 0.82 +- 1/(2K)", 1):
        n = 4001
        # damaged cyan uniform on [0.5, 1], reference on [0.775, 1]:
        # both 20th percentiles land on 0.6 and 0.82
        damaged = ImageBuffer(np.stack([1 - np.linspace(0.5, 1, n)] * 3, -1)[None], None)
        reference = ImageBuffer(np.stack([1 - np.linspace(0.775, 1, n)] * 3, -1)[None], None)
        assert np.quantile(damaged.channel(0), 0.2) == pytest.approx(0.6, abs=1e-12)
        assert np.quantile(reference.channel(0), 0.2) == pytest.approx(0.82, abs=1e-12)
        ts = estimate_pair(damaged, reference, K=K)
        assert abs(ts.cyan.evaluate(0.6) - 0.82) <= 1 / (2 * K)


def test_2_self_pair_identity():
    with criterion("2 self-pair identity within 1e-9 on 10 random images", 5):
        rng = np.random.default_rng(2)
        for i in range(10):
            img = random_scene(rng, (48, 64)) if i % 2 else ImageBuffer(rng.random((40, 40, 3)), None)
            ts = estimate_pair(img, img)
            for t in ts.channels:
                assert np.max(np.abs(t.y - t.x)) <= 1e-9


def test_3_closed_loop_recovery():
    with criterion("3 closed-loop recovery: max dev <= 0.05 on [0.05, 0.95]", 30):
        rng = np.random.default_rng(3)
        truth = ground_truth(RED_SHIFT)
        estimates = []
        for _ in range(10):
            clean = random_scene(rng, (96, 96))
            estimates.append(estimate_pair(degrade(clean, RED_SHIFT), clean))
        learned = aggregate_median(estimates)
        x = learned.cyan.x
        inner = (x >= 0.05) & (x <= 0.95)
        devs = [np.abs(a.y - b.y)[inner].max() for a, b in zip(learned.channels, truth.channels)]
        print("   per-channel max deviation:", ", ".join(f"{d:.4f}" for d in devs))
        assert max(devs) <= 0.05


def test_4_loo_dominance():
    with criterion("4 LOO mean <= 1/3 identity mean and >= 21/22 wins (5 seeds)", 120):
        loo_means, id_means, wins = [], [], []
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            pairs = []
            for _ in range(22):
                clean = random_scene(rng, (64, 64))
                pairs.append((degrade(clean, RED_SHIFT, random_jitters(rng, 0.3)), clean))
            report = loo_cv(pairs)
            loo_means.append(report.summary("loo_median", "uniform")[0])
            id_means.append(report.summary("identity", "uniform")[0])
            wins.append(report.wins("uniform"))
            print(f"   seed {seed}: identity {id_means[-1]:.3f}, LOO {loo_means[-1]:.3f}, "
                  f"wins {wins[-1]}/22")
        assert np.mean(loo_means) <= np.mean(id_means) / 3
        assert np.mean(wins) >= 21


def test_5_metric_oracle():
    with criterion("5 uniform d(identity, x^2) = 100/30 within 1e-3; O(G^-2)", 1):
        def set_with_square(G):
            return TransformSet(ChannelTransform.from_function("C", lambda x: x ** 2, G),
                                ChannelTransform.identity("M", G),
                                ChannelTransform.identity("Y", G))

        d = transform_distance(TransformSet.identity(4096), set_with_square(4096))
        assert abs(d.scaled_components[0] - 100 / 30) <= 1e-3
        errs = [abs(transform_distance(TransformSet.identity(G), set_with_square(G)).total - 1 / 30)
                for G in (4096, 2048, 1024)]
        assert errs[1] / errs[0] >= 3 and errs[2] / errs[1] >= 3


def test_6_color_space_references():
    with criterion("6 white -> L=100 zero chroma; gray monotone; UV <= CIELUV", 5):
        for conv in (rgb_to_lab, rgb_to_luv):
            np.testing.assert_allclose(conv((1, 1, 1)), (100, 0, 0), atol=1e-3)
        t = np.linspace(0, 1, 256)
        L = rgb_to_lab(np.stack([t, t, t], -1))[:, 0]
        assert np.all(np.diff(L) > 0)
        rng = np.random.default_rng(6)
        a, b = rng.random((1000, 3)), rng.random((1000, 3))
        for p, q in zip(a, b):
            p, q = p[None, None], q[None, None]
            assert pixel_distance(p, q, "UV") <= pixel_distance(p, q, "CIELUV") + 1e-12


def test_7_red_shift_direction():
    with criterion("7 learned cyan >= identity; magenta/yellow within 0.03", 30):
        rng = np.random.default_rng(7)
        estimates = []
        for _ in range(10):
            clean = random_scene(rng, (96, 96))
            estimates.append(estimate_pair(degrade(clean, CYAN_ONLY), clean))
        learned = aggregate_median(estimates)
        x = learned.cyan.x
        assert np.all(learned.cyan.y[1:-1] >= x[1:-1])
        for t in (learned.magenta, learned.yellow):
            assert np.abs(t.y - x).max() <= 0.03


def test_8_determinism_and_round_trip(tmp_path):
    with criterion("8 bit-exact document round trip; learn invariant to order/workers", 30):
        rng = np.random.default_rng(8)
        ts = TransformSet.from_curves(
            [np.concatenate([[0], np.sort(rng.random(254)), [1]]) for _ in range(3)],
            metadata={"source": "median-of-22"})
        back = deserialize(serialize(ts))
        for a, b in zip(ts.channels, back.channels):
            assert a.y.tobytes() == b.y.tobytes()
        assert serialize(back) == serialize(ts)

        dmg, ref = tmp_path / "d", tmp_path / "r"
        dmg.mkdir()
        ref.mkdir()
        for i in range(8):
            clean = random_scene(rng, (48, 48))
            write_image(ref / f"p{i}.png", clean)
            write_image(dmg / f"p{i}.png", degrade(clean, RED_SHIFT, random_jitters(rng, 0.2)))
        manifest = ingest(dmg, ref)
        # same pairs listed in reverse order through a manifest file
        write_manifest(tmp_path / "m.csv", manifest)
        lines = (tmp_path / "m.csv").read_text().splitlines()
        (tmp_path / "m.csv").write_text("\n".join([lines[0]] + lines[:0:-1]) + "\n")
        shuffled = ingest(manifest_path=tmp_path / "m.csv")
        stamp = datetime(2024, 12, 4, tzinfo=timezone.utc)
        docs = []
        for m, workers in ((manifest, 1), (shuffled, 4), (manifest, 3)):
            out = tmp_path / f"out{len(docs)}"
            learn(m, JobConfig(workers=workers), out, created=stamp)
            docs.append((out / "transform.json").read_bytes())
        assert docs[0] == docs[1] == docs[2]
