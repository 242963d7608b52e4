"""Two-stage classification: per-frame probabilities, their per-property
means, and the fusion classifier over the resulting 3-vectors.

Stage 1 scores every (frame, property) feature vector with a calibrated SVM
and a sample becomes one probability series per property. The probability
feature vector of a sample is the arithmetic mean of each series, ordered
(depth, illuminant, saliency). Stage 2 is an RBF SVM over those 3-vectors.
Per-property video decisions use a majority vote over frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FeatureVector
from .model import PROPERTY_ORDER, PropertyKind
from .svm import SvmModel, decision_values, platt_calibrate, predict_probabilities, svm_train

FUSION_PROPERTY = "fusion"


@dataclass
class FrameProbabilitySeries:
    """Ordered per-frame attack probabilities for one (sample, property)."""

    sample_id: str
    kind: PropertyKind
    probs: np.ndarray

    def __post_init__(self):
        self.kind = PropertyKind(self.kind)
        self.probs = np.asarray(self.probs, dtype=np.float64).ravel()
        if self.probs.size == 0:
            raise DataError(f"sample {self.sample_id!r}: empty probability series")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise DataError(f"sample {self.sample_id!r}: probabilities outside [0, 1]")

    @property
    def n(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class ProbabilityFeatureVector:
    """Mean attack probability per property for one sample."""

    sample_id: str
    p_depth: float
    p_illuminant: float
    p_saliency: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_depth, self.p_illuminant, self.p_saliency])


def predict_frame_probabilities(
    model: SvmModel, features: list[FeatureVector]
) -> FrameProbabilitySeries:
    """Score one sample's feature vectors with a calibrated stage-1 model."""
    if not features:
        raise DataError("no feature vectors to score")
    sample_id = features[0].sample_id
    kind = features[0].kind
    for fv in features:
        if fv.kind is not kind or fv.sample_id != sample_id:
            raise DataError("mixed sample or property in one prediction call")
        if fv.extractor_id != model.extractor_id:
            raise DataError(
                f"extractor mismatch: features {fv.extractor_id!r} vs "
                f"model {model.extractor_id!r}"
            )
    if model.property_name != kind.value:
        raise DataError(
            f"property mismatch: features {kind.value!r} vs model {model.property_name!r}"
        )
    x = np.stack([fv.values.astype(np.float64) for fv in features])
    probs = predict_probabilities(model, x)
    return FrameProbabilitySeries(sample_id=sample_id, kind=kind, probs=probs)


def assemble_pfv(series: dict[PropertyKind, FrameProbabilitySeries]) -> ProbabilityFeatureVector:
    """Average each property's series into the sample's probability vector."""
    missing = [k.value for k in PROPERTY_ORDER if k not in series]
    if missing:
        raise DataError(f"missing property series: {missing}")
    ids = {s.sample_id for s in series.values()}
    if len(ids) != 1:
        raise DataError(f"series belong to different samples: {sorted(ids)}")
    means = {k: float(np.mean(series[k].probs)) for k in PROPERTY_ORDER}
    return ProbabilityFeatureVector(
        sample_id=ids.pop(),
        p_depth=means[PropertyKind.DEPTH],
        p_illuminant=means[PropertyKind.ILLUMINANT],
        p_saliency=means[PropertyKind.SALIENCY],
    )


def train_fusion_classifier(
    pfvs: list[ProbabilityFeatureVector],
    labels: np.ndarray,
    dev_pfvs: list[ProbabilityFeatureVector],
    dev_labels: np.ndarray,
    c_param: float = 1.0,
    gamma: float | None = None,
    seed: int = 0,
) -> SvmModel:
    """RBF SVM over probability feature vectors, calibrated on the dev set."""
    x = np.stack([p.as_array() for p in pfvs])
    model = svm_train(
        x,
        np.asarray(labels),
        kernel="rbf",
        c_param=c_param,
        gamma=gamma,
        seed=seed,
        extractor_id="pfv",
        property_name=FUSION_PROPERTY,
    )
    dev_x = np.stack([p.as_array() for p in dev_pfvs])
    return platt_calibrate(model, decision_values(model, dev_x), np.asarray(dev_labels))


def majority_vote(probs: np.ndarray, threshold: float = 0.5) -> str:
    """Label from per-frame decisions; exact ties count as attack."""
    probs = np.asarray(probs, dtype=np.float64).ravel()
    if probs.size == 0:
        raise DataError("majority vote over an empty series")
    votes = int(np.sum(probs > threshold))
    return "attack" if 2 * votes >= probs.size else "bonafide"


def majority_vote_video(series: FrameProbabilitySeries, threshold: float = 0.5) -> str:
    """Video label from the sample's per-frame probabilities."""
    return majority_vote(series.probs, threshold)
