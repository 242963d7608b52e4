"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines. Budgets and tolerances are asserted, not just reported.
"""

import json
import math
import time

import numpy as np
import pytest

from padpipe.classify import assemble_pfv, FrameProbabilitySeries
from padpipe.config import RunConfig
from padpipe.features import FEATURE_DIM, FeatureVector, read_feature_values, write_features
from padpipe.maps.illuminant import estimate_illuminant_map
from padpipe.maps.saliency import (
    boundary_connectivity,
    geodesic_distances,
    solve_saliency_scores,
)
from padpipe.maps.superpixels import segment_superpixels
from padpipe.metrics import ConfusionCounts, compute_rates
from padpipe.model import PropertyKind
from padpipe.pfm import read_pfm, write_pfm
from padpipe.preprocess import (
    DecoderConfig,
    EyeLandmarks,
    align_and_crop,
    alignment_transform,
    extract_frames,
)
from padpipe.protocol import render_report, report_from_dict, run_protocol
from padpipe.svm import decision_values, load_model, platt_calibrate, save_model, svm_train
from padpipe.synthgen import SynthSpec, generate_synthetic_dataset

from conftest import make_frame, textured_face
from test_illuminant import render_dichromatic
from test_saliency import (
    _graph,
    brute_force_shortest_paths,
    gradient_descent_minimize,
)
from test_svm import qp_oracle


def _report(k, message, t0, budget_s):
    elapsed = time.time() - t0
    assert elapsed < budget_s, f"criterion {k} exceeded {budget_s}s ({elapsed:.1f}s)"
    print(f"[acceptance {k}] PASS  {message}  ({elapsed:.2f}s)")


def test_criterion_1_metric_oracle():
    t0 = time.time()
    rng = np.random.default_rng(101)
    for _ in range(1000):
        attacks = int(rng.integers(1, 60))
        bona = int(rng.integers(1, 60))
        counts = ConfusionCounts(
            attacks_total=attacks,
            attacks_accepted=int(rng.integers(0, attacks + 1)),
            bonafide_total=bona,
            bonafide_rejected=int(rng.integers(0, bona + 1)),
        )
        apcer, bpcer, hter = compute_rates(counts)
        # independent recount over enumerated presentations
        accepted = sum(1 for i in range(counts.attacks_total) if i < counts.attacks_accepted)
        rejected = sum(1 for i in range(counts.bonafide_total) if i < counts.bonafide_rejected)
        assert apcer == accepted / counts.attacks_total
        assert bpcer == rejected / counts.bonafide_total
        assert hter == (apcer + bpcer) / 2
    _report(1, "compute_rates matches brute-force recount on 1000 tables exactly", t0, 1.0)


def test_criterion_2_svm_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(202)
    for trial in range(50):
        dim = 2 if trial % 2 == 0 else 3
        kernel = "linear" if trial % 4 < 2 else "rbf"
        n = int(rng.integers(6, 21))
        x = rng.uniform(-2, 2, (n, dim))
        w = rng.uniform(-1, 1, dim)
        y = np.sign(x @ w + 0.3 * rng.standard_normal(n))
        y[y == 0] = 1.0
        if np.all(y > 0) or np.all(y < 0):
            y[0] = -y[0]
        c, gamma = 1.0, 0.8
        model = svm_train(x, y, kernel=kernel, c_param=c, gamma=gamma, tol=1e-7)
        _, _, oracle_decide = qp_oracle(x, y, kernel=kernel, c=c, gamma=gamma)
        got = decision_values(model, x)
        want = oracle_decide(x)
        assert np.allclose(got, want, atol=1e-4), f"trial {trial}"
        assert np.array_equal(np.sign(got), np.sign(want)), f"trial {trial}"
    _report(2, "SMO decision values match the projected-gradient QP oracle to 1e-4 on 50 datasets", t0, 30.0)


def test_criterion_3_saliency_optimizer():
    t0 = time.time()
    s = solve_saliency_scores(np.array([1.0, 0.0]), np.array([0.0, 1.0]), [(0, 1, 0.1)])
    assert abs(s[0] - 1.0 / 12.0) <= 1e-9
    assert abs(s[1] - 11.0 / 12.0) <= 1e-9
    rng = np.random.default_rng(303)
    for _ in range(8):
        n = int(rng.integers(2, 7))
        w_bg = rng.uniform(0, 1, n)
        w_fg = rng.uniform(0, 1, n)
        edges = [(i, i + 1, float(rng.uniform(0.05, 1.0))) for i in range(n - 1)]
        for _ in range(n // 2):
            p, q = sorted(int(v) for v in rng.integers(0, n, 2))
            if p != q:
                edges.append((p, q, float(rng.uniform(0.05, 1.0))))
        solved = solve_saliency_scores(w_bg, w_fg, edges)
        oracle = np.clip(gradient_descent_minimize(w_bg, w_fg, edges), 0, 1)
        assert np.allclose(solved, oracle, atol=1e-6)
    _report(3, "linear-system solution matches brute-force minimization (1e-6) and the 2-region closed form (1e-9)", t0, 5.0)


def test_criterion_4_boundary_connectivity():
    t0 = time.time()
    g1 = _graph(np.zeros((2, 2), np.int32), [(0, 0, 0)], [True], [])
    w1 = boundary_connectivity(g1, sigma_clr=10.0)
    assert abs(w1.bndcon[0] - 1.0) <= 1e-9
    assert abs(w1.w_bg[0] - (1.0 - math.exp(-0.5))) <= 1e-9

    labels = np.array([[0, 1, 2]], dtype=np.int32)
    edges = [(0, 1, 1.0), (1, 2, 1.0)]
    g3 = _graph(labels, [(0, 0, 0)] * 3, [True, False, False], edges)
    w3 = boundary_connectivity(g3, sigma_clr=1.0)
    e05, e2 = math.exp(-0.5), math.exp(-2.0)
    expected = [
        1.0 / math.sqrt(1 + e05 + e2),
        e05 / math.sqrt(1 + 2 * e05),
        e2 / math.sqrt(1 + e05 + e2),
    ]
    assert np.allclose(w3.bndcon, expected, atol=1e-9)

    rng = np.random.default_rng(404)
    checked = 0
    while checked < 10_000:
        n = int(rng.integers(4, 14))
        edges = [(i, i + 1, float(rng.uniform(0, 5))) for i in range(n - 1)]
        for _ in range(n):
            p, q = sorted(int(v) for v in rng.integers(0, n, 2))
            if p != q:
                edges.append((p, q, float(rng.uniform(0, 5))))
        g = _graph(
            np.arange(n, dtype=np.int32)[None, :],
            [(0, 0, 0)] * n,
            [True] + [False] * (n - 1),
            edges,
        )
        dist = geodesic_distances(g)
        i, j, k = (rng.integers(0, n, 500) for _ in range(3))
        assert np.all(dist[i, j] <= dist[i, k] + dist[k, j] + 1e-9)
        checked += 500
    _report(4, "boundary connectivity matches hand-computed sums (1e-9); triangle inequality on 10^4 triples", t0, 30.0)


def test_criterion_5_illuminant_recovery():
    t0 = time.time()
    rng = np.random.default_rng(505)
    errors = []
    for _ in range(20):
        gamma = rng.uniform(0.2, 0.5, 3)
        gamma /= gamma.sum()
        body = rng.uniform(0.3, 0.9, 3)
        frame = make_frame(render_dichromatic(gamma, body, m_d=rng.uniform(0.35, 0.65)))
        graph = segment_superpixels(frame, target_count=16)
        result = estimate_illuminant_map(frame, graph)
        est = result.data.reshape(-1, 3).mean(axis=0)
        errors.append(np.abs(est - gamma))
    mean_err = float(np.mean(errors))
    assert mean_err <= 0.03, f"mean per-channel error {mean_err:.4f}"
    _report(5, f"illuminant recovery error {mean_err:.4f} <= 0.03 on 20 dichromatic renders", t0, 20.0)


def test_criterion_6_probability_vector_fidelity():
    t0 = time.time()
    rng = np.random.default_rng(606)
    for _ in range(10_000):
        n = int(rng.integers(1, 12))
        probs = {k: rng.uniform(0, 1, n) for k in PropertyKind}
        pfv = assemble_pfv(
            {
                k: FrameProbabilitySeries(sample_id="s", kind=k, probs=v)
                for k, v in probs.items()
            }
        )
        for value, kind in (
            (pfv.p_depth, PropertyKind.DEPTH),
            (pfv.p_illuminant, PropertyKind.ILLUMINANT),
            (pfv.p_saliency, PropertyKind.SALIENCY),
        ):
            assert abs(value - math.fsum(probs[kind]) / len(probs[kind])) <= 1e-12
    _report(6, "pfv means equal compensated summation within 1e-12 on 10^4 series", t0, 30.0)


def test_criterion_7_end_to_end_synthetic(tmp_path):
    t0 = time.time()
    spec = SynthSpec(
        n_subjects=10, videos_per_subject=4, frames_per_video=10, seed=11, depth_size=64
    )
    generate_synthetic_dataset(spec, tmp_path / "data")

    def once(cache):
        cfg = RunConfig(
            manifests=(str(tmp_path / "data" / "manifest.jsonl"),),
            cache_dir=str(tmp_path / cache),
            canonical_size=64,
            superpixels=64,
            depth_mode="precomputed",
            depth_path_template=str(
                tmp_path / "data" / "depth" / "{sample_id}" / "{index:06d}.pfm"
            ),
            extractor_mode="fallback",
            protocol_mode="intra",
            train_datasets=("synth",),
            test_dataset="synth",
            seed=11,
        )
        return run_protocol(cfg)

    report = once("cache_a")
    fused = report.row("Fused").overall.hter
    weakest = max(
        report.row(m).overall.hter for m in ("Depth", "Illuminant", "Saliency")
    )
    assert fused <= 0.05, f"fused HTER {fused:.3f}"
    assert fused <= weakest + 1e-12
    report_b = once("cache_b")
    assert render_report(report, "json") == render_report(report_b, "json")
    _report(
        7,
        f"end-to-end synthetic: fused HTER {fused:.3f} <= 0.05, <= weakest {weakest:.3f}; deterministic",
        t0,
        120.0,
    )


def test_criterion_8_frame_extraction(tmp_path, fake_decoder, fake_video):
    t0 = time.time()
    video = fake_video(duration=3.0, fps=30)
    seq = extract_frames(video, rate_hz=10, decoder=DecoderConfig(command=fake_decoder))
    assert seq.n == 30
    for k, frame in enumerate(seq.frames):
        assert frame.timestamp_s == k / 10
    _report(8, "3.0s @ 30fps at rate 10 yields exactly 30 frames at t = k/10", t0, 30.0)


def test_criterion_9_alignment():
    t0 = time.time()
    lm = EyeLandmarks(left_eye=(60, 100), right_eye=(160, 100))
    mat = alignment_transform(lm, 224, 0.40, 0.42)
    for src, want in (
        ((60.0, 100.0), (224 / 2 - 0.21 * 224, 0.40 * 224)),
        ((160.0, 100.0), (224 / 2 + 0.21 * 224, 0.40 * 224)),
    ):
        got = mat[:, :2] @ np.array(src) + mat[:, 2]
        assert np.all(np.abs(got - np.array(want)) <= 0.5)

    frame = make_frame(textured_face(140, seed=2))
    size = 96
    once = align_and_crop(
        frame, EyeLandmarks(left_eye=(45, 60), right_eye=(95, 68)), canonical_size=size
    )
    canonical = EyeLandmarks(
        left_eye=(size / 2 - 0.21 * size, 0.40 * size),
        right_eye=(size / 2 + 0.21 * size, 0.40 * size),
    )
    twice = align_and_crop(once, canonical, canonical_size=size)
    mean_abs = np.abs(twice.pixels.astype(float) - once.pixels.astype(float)).mean()
    assert mean_abs <= 1.0
    _report(9, f"landmarks map within 0.5 px; double alignment changes {mean_abs:.3f} <= 1 level", t0, 30.0)


def test_criterion_10_formats(tmp_path):
    t0 = time.time()
    rng = np.random.default_rng(1010)

    data = rng.random((19, 13)).astype(np.float32)
    write_pfm(tmp_path / "m.pfm", data)
    assert np.array_equal(read_pfm(tmp_path / "m.pfm"), data)

    values = rng.random(FEATURE_DIM).astype(np.float32)
    fv = FeatureVector(
        values=values, kind=PropertyKind.DEPTH, sample_id="s", frame_index=0,
        extractor_id="fallback-v1",
    )
    write_features(tmp_path / "f.padf", fv)
    assert np.array_equal(read_feature_values(tmp_path / "f.padf"), values)

    x = rng.uniform(-1, 1, (12, 3))
    y = np.array([-1.0, 1.0] * 6)
    model = svm_train(x, y, kernel="rbf", c_param=2.0, extractor_id="e", property_name="depth")
    model = platt_calibrate(model, decision_values(model, x), y)
    save_model(tmp_path / "m.padm", model)
    back = load_model(tmp_path / "m.padm")
    probes = rng.uniform(-1, 1, (100, 3))
    assert np.array_equal(decision_values(model, probes), decision_values(back, probes))

    from test_protocol import _tiny_report

    report = _tiny_report()
    blob = render_report(report, "json")
    assert report_from_dict(json.loads(blob)) == report
    _report(10, "PADF/PADM/PFM round-trips bit-exact; report JSON round-trips to equality", t0, 30.0)
