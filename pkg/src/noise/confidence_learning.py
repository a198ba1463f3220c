"""
Confidence learning for binary labels.

Thresholds are the mean label confidence of each given class, a sample's
estimated label is the class (or classes) whose probability reaches its
threshold, the confidence joint counts given against estimated labels, and the
joint distribution rescales its rows to the class sizes. The off-diagonal mass
says how many given labels to distrust; the filters remove that many samples,
least confident first.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.custom_exception import ThresholdError
from src.kernel.prob_pair import ProbPair

NULL = None


@dataclass(frozen=True)
class SamplePrediction:
    sample_id: str
    probs: ProbPair
    given_label: int
    group: str = ''

    @property
    def label_confidence(self):
        return self.probs[self.given_label]

    @property
    def margin(self):
        """Probability of the other class minus that of the given label."""
        return self.probs[1 - self.given_label] - self.probs[self.given_label]


@dataclass(frozen=True)
class ClassThresholds:
    t0: float
    t1: float

    def __getitem__(self, c):
        return (self.t0, self.t1)[c]


@dataclass
class JointDistribution:
    C: np.ndarray
    Q: np.ndarray
    class_sizes: tuple = (0, 0)

    @property
    def off_diagonal(self):
        return float(self.Q[0, 1] + self.Q[1, 0])


@dataclass
class NoiseFilterResult:
    removed_ids: List[str] = field(default_factory=list)
    n_noise: int = 0
    requested: int = 0
    margins: Dict[str, float] = field(default_factory=dict)
    label_confidences: Dict[str, float] = field(default_factory=dict)
    pool_size: int = 0


def round_half_away(x):
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def label_confidence(pred: SamplePrediction):
    return pred.label_confidence


def class_thresholds(preds: List[SamplePrediction]) -> ClassThresholds:
    values = []
    for c in (0, 1):
        confidences = [p.label_confidence for p in preds if p.given_label == c]
        if not confidences:
            raise ThresholdError(f"no samples with given label {c}, class threshold undefined")
        values.append(float(np.mean(confidences)))
    return ClassThresholds(*values)


def estimated_label(pred: SamplePrediction, t: ClassThresholds) -> Optional[int]:
    candidates = [c for c in (0, 1) if pred.probs[c] >= t[c]]
    if not candidates:
        return NULL
    if len(candidates) == 1:
        return candidates[0]
    return pred.probs.predict_label()


def confidence_joint(preds: List[SamplePrediction], t: ClassThresholds) -> np.ndarray:
    C = np.zeros((2, 2), dtype=np.int64)
    for pred in preds:
        y_plus = estimated_label(pred, t)
        if y_plus is not NULL:
            C[pred.given_label, y_plus] += 1
    return C


def joint_distribution(C, class_sizes) -> JointDistribution:
    C = np.asarray(C, dtype=np.int64)
    calibrated = np.zeros((2, 2))
    for i in (0, 1):
        row_total = C[i].sum()
        if row_total == 0:
            if class_sizes[i] > 0:
                logging.warning(f"joint_distribution: confidence joint row {i} is empty, "
                                f"it contributes nothing to Q")
            continue
        calibrated[i] = C[i] / row_total * class_sizes[i]
    total = calibrated.sum()
    Q = calibrated / total if total > 0 else calibrated
    if total == 0:
        logging.warning("joint_distribution: every row is empty, Q is all zeros")
    return JointDistribution(C, Q, tuple(int(x) for x in class_sizes))


def estimate_joint(preds: List[SamplePrediction]):
    """Thresholds, counts and Q from one set of predictions."""
    t = class_thresholds(preds)
    C = confidence_joint(preds, t)
    sizes = (sum(1 for p in preds if p.given_label == 0), sum(1 for p in preds if p.given_label == 1))
    return t, joint_distribution(C, sizes)


def _remove_least_confident(pool: List[SamplePrediction], requested):
    n_noise = requested
    if n_noise > len(pool):
        logging.warning(f"noise filter: {n_noise} samples requested from a pool of {len(pool)}, clamped")
        n_noise = len(pool)
    ranked = sorted(pool, key=lambda p: (-p.margin, p.sample_id))
    removed = ranked[:n_noise]
    return NoiseFilterResult(
        removed_ids=[p.sample_id for p in removed],
        n_noise=n_noise,
        requested=requested,
        margins={p.sample_id: p.margin for p in pool},
        label_confidences={p.sample_id: p.label_confidence for p in pool},
        pool_size=len(pool))


def pbnr_filter(un_preds: List[SamplePrediction], Q) -> NoiseFilterResult:
    """Remove round(|UN| * Q[0][1]) UN samples with the largest p1 - p0."""
    Q = np.asarray(getattr(Q, 'Q', Q))
    requested = round_half_away(len(un_preds) * Q[0, 1])
    return _remove_least_confident(un_preds, requested)


def symmetric_filter(noisy_preds: List[SamplePrediction], Q) -> NoiseFilterResult:
    """Both off-diagonal cells drive removal when either class may be corrupted."""
    Q = np.asarray(getattr(Q, 'Q', Q))
    requested = round_half_away(len(noisy_preds) * (Q[0, 1] + Q[1, 0]))
    return _remove_least_confident(noisy_preds, requested)


def write_noise_report(path, result: NoiseFilterResult, joint: JointDistribution, thresholds: ClassThresholds):
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        file.write(f"thresholds {'%.17g' % thresholds.t0} {'%.17g' % thresholds.t1}\n")
        file.write(f"class_sizes {joint.class_sizes[0]} {joint.class_sizes[1]}\n")
        for i in (0, 1):
            file.write(f"C{i} {joint.C[i, 0]} {joint.C[i, 1]}\n")
        for i in (0, 1):
            file.write(f"Q{i} {'%.17g' % joint.Q[i, 0]} {'%.17g' % joint.Q[i, 1]}\n")
        file.write(f"pool {result.pool_size} requested {result.requested} removed {result.n_noise}\n")
        for sample_id in result.removed_ids:
            file.write(f"{sample_id} {'%.17g' % result.margins[sample_id]} "
                       f"{'%.17g' % result.label_confidences[sample_id]}\n")
