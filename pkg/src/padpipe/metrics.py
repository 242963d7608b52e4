"""Error rates and threshold selection for presentation attack detection.

APCER: fraction of attacks accepted as bona fide. BPCER: fraction of bona
fide presentations rejected as attacks. HTER: their mean at one threshold.
A presentation is called an attack when its score is strictly above the
threshold. Thresholds are chosen on a dev set at the equal-error operating
point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ConfusionCounts:
    attacks_total: int
    attacks_accepted: int  # attacks classified bona fide
    bonafide_total: int
    bonafide_rejected: int  # bona fide classified attack

    def __post_init__(self):
        for name in ("attacks_total", "attacks_accepted", "bonafide_total", "bonafide_rejected"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be nonnegative")
        if self.attacks_accepted > self.attacks_total:
            raise DataError("attacks_accepted exceeds attacks_total")
        if self.bonafide_rejected > self.bonafide_total:
            raise DataError("bonafide_rejected exceeds bonafide_total")


def compute_rates(counts: ConfusionCounts) -> tuple[float, float, float]:
    """(apcer, bpcer, hter), each in [0, 1]."""
    if counts.attacks_total == 0:
        raise DataError("cannot compute rates: attack class is empty")
    if counts.bonafide_total == 0:
        raise DataError("cannot compute rates: bonafide class is empty")
    apcer = counts.attacks_accepted / counts.attacks_total
    bpcer = counts.bonafide_rejected / counts.bonafide_total
    return apcer, bpcer, (apcer + bpcer) / 2.0


def counts_at_threshold(scores, labels, threshold: float) -> ConfusionCounts:
    """Confusion counts when scores > threshold are called attacks.

    Labels are +1 attack, -1 bonafide.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    attacks = labels > 0
    return ConfusionCounts(
        attacks_total=int(attacks.sum()),
        attacks_accepted=int(np.sum(attacks & (scores <= threshold))),
        bonafide_total=int((~attacks).sum()),
        bonafide_rejected=int(np.sum(~attacks & (scores > threshold))),
    )


def select_threshold_eer(scores, labels) -> float:
    """Threshold minimizing |APCER - BPCER| over midpoints of consecutive
    sorted scores; ties break toward the smaller threshold."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if not (np.any(labels > 0) and np.any(labels <= 0)):
        raise DataError("threshold selection needs both classes in the dev set")
    uniq = np.unique(scores)
    if len(uniq) == 1:
        return float(uniq[0])
    candidates = (uniq[:-1] + uniq[1:]) / 2.0
    best_tau = None
    best_gap = np.inf
    for tau in candidates:
        apcer, bpcer, _ = compute_rates(counts_at_threshold(scores, labels, tau))
        gap = abs(apcer - bpcer)
        if gap < best_gap:
            best_gap = gap
            best_tau = float(tau)
    return best_tau
