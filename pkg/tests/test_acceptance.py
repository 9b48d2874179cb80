"""Acceptance suite: one test per release criterion, each printing a
pass/fail line. Tolerances are pinned here, not configurable.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
"""

import contextlib
import json
import time

import numpy as np
import pytest

from hrlc.cli import main
from hrlc.metrics import binary_metrics, evaluate_sequence, format_table
from hrlc.pca import pca_fit, pca_reconstruct, pca_transform
from hrlc.kmeans import kmeans_fit
from hrlc.pipeline import (
    PipelineConfig,
    allocate_batches,
    extract_prototypes,
    intra_batch_cluster,
    run_pipeline,
)
from hrlc.synth import (
    SynthSpec,
    adjusted_rand_index,
    default_generators,
    generate,
    min_generator_distance,
)
from hrlc.tensor_io import LabelMapSequence, write_feature_tensor

from test_kmeans import exhaustive_min_inertia
from test_metrics import swapped_label_fixture
from test_pipeline import brute_force_prototypes, cross_batch_agreement


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


def full_size_spec(layout, sigma_rel, seed=0, generator_seed=42):
    generators = default_generators(3, 256, seed=generator_seed)
    sigma = sigma_rel * min_generator_distance(generators)
    return SynthSpec(
        n_frames=8, height=64, width=64, generators=generators,
        layout=layout, noise_sigma=sigma, seed=seed,
    )


def test_zero_noise_recovery():
    with criterion("zero-noise recovery (stripes, ARI = 1.0, < 30 s)"):
        spec = full_size_spec("stripes", sigma_rel=0.0)
        seq, truth = generate(spec)
        start = time.perf_counter()
        labels = run_pipeline(seq, PipelineConfig(intra_k=3, inter_k=3), threads=1)
        elapsed = time.perf_counter() - start
        assert adjusted_rand_index(labels.maps, truth.maps) == 1.0
        assert elapsed < 30.0, f"pipeline took {elapsed:.1f} s"


def test_noisy_consistency():
    with criterion("noisy consistency (drift, ARI >= 0.99, agreement >= 0.99)"):
        spec = full_size_spec("drift", sigma_rel=0.05)
        seq, truth = generate(spec)
        cfg = PipelineConfig(batch_size=4, intra_k=6, inter_k=3)
        labels = run_pipeline(seq, cfg)
        assert adjusted_rand_index(labels.maps, truth.maps) >= 0.99
        part = allocate_batches(seq.n_frames, cfg.batch_size)
        agreement = cross_batch_agreement(labels.maps, truth.maps, part.batches)
        assert agreement >= 0.99


def test_consistency_sensitivity():
    with criterion("consistency sensitivity (swapped labels score strictly lower)"):
        consistent, swapped, gts = swapped_label_fixture()
        for mode in ("majority", "best-iou"):
            good = evaluate_sequence(consistent, gts, mode=mode)
            bad = evaluate_sequence(swapped, gts, mode=mode)
            assert bad.per_sequence[0] < good.per_sequence[0], mode


def test_kmeans_oracle():
    with criterion("k-means oracle (>= 95/100 exhaustive optima, monotone inertia)"):
        rng = np.random.default_rng(20240817)
        hits = 0
        for _ in range(100):
            k = int(rng.integers(1, 4))
            n = int(rng.integers(k, 13))
            d = int(rng.integers(1, 3))
            points = rng.uniform(-1.0, 1.0, size=(n, d))
            best = np.inf
            for seed in range(50):
                result = kmeans_fit(points, k=k, seed=seed)
                history = result.history
                assert all(
                    history[i + 1] <= history[i] * (1 + 1e-12) + 1e-12
                    for i in range(len(history) - 1)
                ), "inertia increased during Lloyd iterations"
                best = min(best, result.inertia)
            if abs(best - exhaustive_min_inertia(points, k)) <= 1e-9:
                hits += 1
        assert hits >= 95, f"only {hits}/100 instances reached the exhaustive optimum"


def test_pca_properties():
    with criterion("PCA properties (orthonormal, reconstructive, ordered, deterministic)"):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((300, 24)) * np.linspace(3.0, 0.5, 24)

        model = pca_fit(X, d=10)
        gram = model.basis.T @ model.basis
        assert np.abs(gram - np.eye(10)).max() < 1e-6
        assert (np.diff(model.explained_variance) <= 1e-12).all()

        full = pca_fit(X, d=24)
        recon = pca_reconstruct(full, pca_transform(full, X))
        assert np.abs(recon - X).max() < 1e-5

        again = pca_fit(X.copy(), d=10)
        assert model.mean.tobytes() == again.mean.tobytes()
        assert model.basis.tobytes() == again.basis.tobytes()
        assert model.explained_variance.tobytes() == again.explained_variance.tobytes()


def test_prototype_oracle():
    with criterion("prototype oracle (20 random runs match brute-force means)"):
        rng = np.random.default_rng(99)
        for run in range(20):
            g = int(rng.integers(2, 5))
            dim = int(rng.integers(6, 24))
            generators = default_generators(g, dim, seed=int(rng.integers(1 << 30)))
            sigma = 0.2 * min_generator_distance(generators)
            spec = SynthSpec(
                n_frames=int(rng.integers(2, 7)),
                height=int(rng.integers(4, 9)),
                width=int(rng.integers(4, 9)),
                generators=generators,
                layout=("stripes", "drift", "swap")[run % 3],
                noise_sigma=sigma,
                seed=run,
            )
            seq, _ = generate(spec)
            cfg = PipelineConfig(
                batch_size=int(rng.integers(1, 4)),
                intra_k=int(rng.integers(2, 5)),
                pca_dim_intra=int(rng.integers(2, dim + 1)),
                seed=run,
            )
            part = allocate_batches(seq.n_frames, cfg.batch_size)
            clusterings, _ = intra_batch_cluster(seq, part, cfg)
            protos = extract_prototypes(seq, part, clusterings)
            brute = brute_force_prototypes(seq, part, clusterings)
            assert np.allclose(protos.prototypes, brute, rtol=1e-5, atol=1e-12)


def test_metrics_hand_cases():
    with criterion("metrics hand cases (1/3, 1/2, 1/2; identity; empty; Avg row)"):
        gt = np.zeros((4, 4), dtype=bool)
        gt[0:2, 0:2] = True
        pred = np.zeros((4, 4), dtype=bool)
        pred[1:3, 0:2] = True
        iou, f1, recall = binary_metrics(pred, gt)
        assert iou == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert f1 == pytest.approx(0.5, abs=1e-12)
        assert recall == pytest.approx(0.5, abs=1e-12)

        assert binary_metrics(gt, gt) == (1.0, 1.0, 1.0)
        assert binary_metrics(np.zeros_like(gt), gt) == (0.0, 0.0, 0.0)

        table = format_table(
            [("alpha", 0.6227, 0.8328, 0.7419), ("beta", 0.6541, 0.8154, 0.9934)]
        )
        avg = [line for line in table.splitlines() if line.startswith("Avg")][0]
        assert avg.split() == ["Avg", "0.6384", "0.8241", "0.8677"]


def test_cmd_all_thread_determinism(tmp_path):
    with criterion("cmd_all determinism (--threads 1 vs 8 byte-identical)"):
        spec = full_size_spec("drift", sigma_rel=0.05)
        seq, truth = generate(spec)
        features = tmp_path / "features"
        masks = tmp_path / "masks"
        features.mkdir()
        masks.mkdir()
        for i, frame_id in enumerate(seq.frame_ids):
            write_feature_tensor(seq.frames[i], features / f"{frame_id}.npy")
        from hrlc import png_io

        for i in range(truth.maps.shape[0]):
            png_io.write_png(masks / f"{i:05d}.png", truth.maps[i].astype(np.uint8))

        trees = {}
        for threads in (1, 8):
            out = tmp_path / f"run{threads}"
            start = time.perf_counter()
            code = main([
                "all", str(features), str(masks), str(out),
                "--threads", str(threads), "--intra-k", "6", "--inter-k", "3",
            ])
            assert code == 0
            assert time.perf_counter() - start < 60.0
            trees[threads] = {
                str(p.relative_to(out)): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()
            }
        t1, t8 = trees[1], trees[8]
        assert set(t1) == set(t8)
        for name in t1:
            if name != "manifest.json":
                assert t1[name] == t8[name], f"{name} differs between thread counts"
        m1 = json.loads(t1["manifest.json"])
        m8 = json.loads(t8["manifest.json"])
        for m in (m1, m8):
            m.pop("timings_ms")
            m["outputs"].pop("out_dir")
        assert m1 == m8


def test_prototype_shape_law():
    with criterion("shape law (n=8, bs=4, intra_k=6 -> prototype matrix 12x256)"):
        spec = full_size_spec("stripes", sigma_rel=0.2)
        seq, _ = generate(spec)
        cfg = PipelineConfig(batch_size=4, intra_k=6)
        part = allocate_batches(seq.n_frames, cfg.batch_size)
        clusterings, _ = intra_batch_cluster(seq, part, cfg)
        protos = extract_prototypes(seq, part, clusterings)
        assert protos.prototypes.shape == (12, 256)
        assert protos.origin == [(b, j) for b in range(2) for j in range(6)]
