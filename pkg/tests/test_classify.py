import math

import numpy as np
import pytest

from padpipe.classify import (
    FrameProbabilitySeries,
    ProbabilityFeatureVector,
    assemble_pfv,
    majority_vote_video,
    predict_frame_probabilities,
    train_fusion_classifier,
)
from padpipe.errors import DataError
from padpipe.features import FEATURE_DIM, FeatureVector
from padpipe.metrics import select_threshold_eer
from padpipe.model import PropertyKind
from padpipe.svm import decision_values, fit_sigmoid, platt_calibrate, svm_train


def make_features(vectors, kind=PropertyKind.DEPTH, sample_id="s0", extractor="fallback-v1"):
    out = []
    for i, vec in enumerate(vectors):
        full = np.zeros(FEATURE_DIM, dtype=np.float32)
        full[: len(vec)] = vec
        out.append(
            FeatureVector(
                values=full,
                kind=kind,
                sample_id=sample_id,
                frame_index=i,
                extractor_id=extractor,
            )
        )
    return out


def trained_model(kind=PropertyKind.DEPTH, extractor="fallback-v1"):
    rng = np.random.default_rng(0)
    x = np.zeros((20, FEATURE_DIM))
    x[:, 0] = np.concatenate([rng.normal(-1, 0.2, 10), rng.normal(1, 0.2, 10)])
    y = np.array([-1.0] * 10 + [1.0] * 10)
    model = svm_train(
        x, y, kernel="linear", c_param=1.0,
        extractor_id=extractor, property_name=kind.value,
    )
    return platt_calibrate(model, decision_values(model, x), y)


def test_single_frame_series():
    model = trained_model()
    series = predict_frame_probabilities(model, make_features([[0.5]]))
    assert series.n == 1
    assert 0.0 <= series.probs[0] <= 1.0


def test_duplicate_frames_get_identical_probabilities():
    model = trained_model()
    series = predict_frame_probabilities(model, make_features([[0.7], [0.7], [0.7]]))
    assert series.probs[0] == series.probs[1] == series.probs[2]


def test_property_and_extractor_mismatches_error():
    model = trained_model(kind=PropertyKind.DEPTH)
    feats = make_features([[0.1]], kind=PropertyKind.SALIENCY)
    with pytest.raises(DataError, match="property mismatch"):
        predict_frame_probabilities(model, feats)
    feats2 = make_features([[0.1]], extractor="external-abc")
    with pytest.raises(DataError, match="extractor mismatch"):
        predict_frame_probabilities(model, feats2)


def _series(sample_id, kind, probs):
    return FrameProbabilitySeries(sample_id=sample_id, kind=kind, probs=np.asarray(probs))


def test_pfv_of_constant_series():
    series = {
        PropertyKind.DEPTH: _series("a", PropertyKind.DEPTH, [0.5, 0.5]),
        PropertyKind.ILLUMINANT: _series("a", PropertyKind.ILLUMINANT, [0.5, 0.5]),
        PropertyKind.SALIENCY: _series("a", PropertyKind.SALIENCY, [0.5, 0.5]),
    }
    pfv = assemble_pfv(series)
    assert (pfv.p_depth, pfv.p_illuminant, pfv.p_saliency) == (0.5, 0.5, 0.5)


def test_pfv_is_the_arithmetic_mean():
    series = {
        PropertyKind.DEPTH: _series("a", PropertyKind.DEPTH, [0.2, 0.4, 0.9]),
        PropertyKind.ILLUMINANT: _series("a", PropertyKind.ILLUMINANT, [0.1, 0.3, 0.5]),
        PropertyKind.SALIENCY: _series("a", PropertyKind.SALIENCY, [1.0, 0.0, 0.5]),
    }
    pfv = assemble_pfv(series)
    assert pfv.p_depth == pytest.approx(0.5, abs=0)
    assert pfv.as_array().tolist() == [pfv.p_depth, pfv.p_illuminant, pfv.p_saliency]


def test_pfv_matches_compensated_summation():
    rng = np.random.default_rng(5)
    for _ in range(50):
        probs = {k: rng.uniform(0, 1, 7) for k in PropertyKind}
        series = {k: _series("a", k, v) for k, v in probs.items()}
        pfv = assemble_pfv(series)
        for value, kind in (
            (pfv.p_depth, PropertyKind.DEPTH),
            (pfv.p_illuminant, PropertyKind.ILLUMINANT),
            (pfv.p_saliency, PropertyKind.SALIENCY),
        ):
            oracle = math.fsum(probs[kind]) / len(probs[kind])
            assert abs(value - oracle) <= 1e-12


def test_pfv_requires_all_three_properties():
    series = {PropertyKind.DEPTH: _series("a", PropertyKind.DEPTH, [0.5])}
    with pytest.raises(DataError, match="missing property"):
        assemble_pfv(series)


def test_pfv_requires_one_sample():
    series = {
        PropertyKind.DEPTH: _series("a", PropertyKind.DEPTH, [0.5]),
        PropertyKind.ILLUMINANT: _series("b", PropertyKind.ILLUMINANT, [0.5]),
        PropertyKind.SALIENCY: _series("a", PropertyKind.SALIENCY, [0.5]),
    }
    with pytest.raises(DataError, match="different samples"):
        assemble_pfv(series)


def _pfv(sample_id, values):
    return ProbabilityFeatureVector(
        sample_id=sample_id, p_depth=values[0], p_illuminant=values[1], p_saliency=values[2]
    )


def test_fusion_separates_clustered_pfvs():
    rng = np.random.default_rng(1)
    attacks = [_pfv(f"a{i}", np.clip(rng.normal(0.9, 0.03, 3), 0, 1)) for i in range(20)]
    bona = [_pfv(f"b{i}", np.clip(rng.normal(0.1, 0.03, 3), 0, 1)) for i in range(20)]
    labels = np.array([1.0] * 20 + [-1.0] * 20)
    model = train_fusion_classifier(attacks + bona, labels, attacks + bona, labels, seed=3)
    holdout_attacks = np.clip(rng.normal(0.9, 0.03, (10, 3)), 0, 1)
    holdout_bona = np.clip(rng.normal(0.1, 0.03, (10, 3)), 0, 1)
    scores = decision_values(model, np.vstack([holdout_attacks, holdout_bona]))
    assert np.all(scores[:10] > 0)
    assert np.all(scores[10:] < 0)
    assert model.property_name == "fusion"


def test_fusion_rejects_single_class():
    pfvs = [_pfv(f"a{i}", [0.9, 0.9, 0.9]) for i in range(5)]
    with pytest.raises(DataError, match="both classes"):
        train_fusion_classifier(pfvs, np.ones(5), pfvs, np.ones(5))


def test_majority_vote_examples():
    assert majority_vote_video(_series("a", PropertyKind.DEPTH, [0.9, 0.8, 0.1])) == "attack"
    assert majority_vote_video(_series("a", PropertyKind.DEPTH, [0.4])) == "bonafide"
    # documented tie rule: an exact tie is called an attack
    assert majority_vote_video(_series("a", PropertyKind.DEPTH, [0.9, 0.1])) == "attack"


def test_affine_scaling_leaves_vote_labels_unchanged():
    rng = np.random.default_rng(6)
    dev_scores = np.concatenate([rng.normal(-1, 0.5, 40), rng.normal(1, 0.5, 40)])
    dev_labels = np.array([-1.0] * 40 + [1.0] * 40)
    test_scores = rng.normal(0, 1.2, (15, 5))  # 15 videos, 5 frames each

    def vote_labels(scale):
        a, b = fit_sigmoid(dev_scores * scale, dev_labels)
        dev_probs = 1.0 / (1.0 + np.exp(a * dev_scores * scale + b))
        tau = select_threshold_eer(dev_probs, dev_labels)
        out = []
        for video in test_scores:
            probs = 1.0 / (1.0 + np.exp(a * video * scale + b))
            out.append(majority_vote_video(_series("v", PropertyKind.DEPTH, probs), tau))
        return out

    assert vote_labels(1.0) == vote_labels(7.5)
