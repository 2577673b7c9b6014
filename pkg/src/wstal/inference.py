"""Detection pipeline: class selection, attention proposals, scoring, NMS.

A test video runs through five steps: per-stream video-level class
probabilities select candidate classes; the per-stream attentions are
averaged; thresholding the fused attention at a sweep of values yields
1-d connected runs that become segment proposals; each proposal is scored
by the mean of the attention-weighted temporal class activation across the
streams; class-wise greedy NMS removes overlapping detections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import tiou
from .model import StreamModel, attention, pool, video_probs
from .validation import (
    check_features,
    check_probability_vector,
    check_unit_interval,
    check_vector,
)

DEFAULT_ATTENTION_THRESHOLDS = tuple(float(k) * 0.025 for k in range(21))  # 0.0 .. 0.5


@dataclass(frozen=True)
class SegmentProposal:
    t_start: int  # inclusive segment indices
    t_end: int
    class_id: int


@dataclass
class Detection:
    class_id: int
    t_start: int
    t_end: int
    start_sec: float
    end_sec: float
    score: float


@dataclass(frozen=True)
class InferenceConfig:
    class_prob_threshold: float = 0.1
    attention_thresholds: tuple = field(default=DEFAULT_ATTENTION_THRESHOLDS)
    nms_iou: float = 0.5
    theta: float = 0.5  # relative weight of the rgb stream in scoring
    segment_seconds: float = 1.0

    def __post_init__(self):
        taus = tuple(float(t) for t in self.attention_thresholds)
        if not taus or any(not (0.0 <= t < 1.0) for t in taus):
            raise ValueError("attention thresholds must lie in [0, 1)")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("attention thresholds must be strictly increasing")
        object.__setattr__(self, "attention_thresholds", taus)
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.segment_seconds <= 0:
            raise ValueError("segment_seconds must be > 0")


def select_classes(stream_probs, config: InferenceConfig) -> list[int]:
    """Foreground classes whose stream-averaged probability clears the threshold.

    Falls back to the single best foreground class (ties to the lowest id)
    when nothing clears it; the background class 0 is never selected.
    """
    probs = [check_probability_vector(p) for p in stream_probs]
    avg = np.mean(probs, axis=0)
    fg = avg[1:]
    selected = [c + 1 for c in range(fg.shape[0]) if fg[c] >= config.class_prob_threshold]
    if not selected:
        selected = [int(np.argmax(fg)) + 1]
    return selected


def fused_attention(attentions) -> np.ndarray:
    """Elementwise mean of the per-stream attention vectors."""
    arrs = [check_unit_interval(check_vector(a, name="attention"), name="attention")
            for a in attentions]
    if len({a.shape[0] for a in arrs}) != 1:
        raise ValueError(f"attention length mismatch: {[a.shape[0] for a in arrs]}")
    return np.mean(arrs, axis=0)


def connected_segments(lam: np.ndarray, tau: float) -> list[tuple[int, int]]:
    """Maximal runs of consecutive t with lam_t > tau, ordered by start."""
    lam = check_vector(lam, name="lam")
    above = lam > tau
    runs = []
    start = None
    for t, flag in enumerate(above):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            runs.append((start, t - 1))
            start = None
    if start is not None:
        runs.append((start, lam.shape[0] - 1))
    return runs


def propose(lam: np.ndarray, class_ids, config: InferenceConfig) -> list[SegmentProposal]:
    """Pool the runs from every threshold, crossed with every candidate class.

    Exact duplicate (start, end, class) triples are removed; output is sorted
    by (class, start, end) for determinism.
    """
    intervals = set()
    for tau in config.attention_thresholds:
        intervals.update(connected_segments(lam, tau))
    triples = sorted(
        (cls, start, end) for cls in class_ids for (start, end) in intervals
    )
    return [SegmentProposal(t_start=s, t_end=e, class_id=c) for c, s, e in triples]


def score_proposal(
    proposal: SegmentProposal,
    models: dict,
    features: dict,
    theta: float,
) -> float:
    """Mean attention-weighted class activation inside the proposal.

    Each stream contributes lam_t * (w_c . x_t) from its own attention and
    classifier row; the rgb stream is weighted theta, flow 1 - theta.
    """
    weights = _stream_weights(models.keys(), theta)
    total = 0.0
    for modality, model in models.items():
        feats = check_features(features[modality])
        if not (0 <= proposal.t_start <= proposal.t_end < feats.shape[0]):
            raise ValueError(
                f"proposal [{proposal.t_start}, {proposal.t_end}] outside video "
                f"of {feats.shape[0]} segments"
            )
        lam = attention(model, feats)
        sl = slice(proposal.t_start, proposal.t_end + 1)
        activation = feats[sl] @ model.classifier[proposal.class_id]
        total += weights[modality] * float(np.mean(lam[sl] * activation))
    return total


def _stream_weights(modalities, theta: float) -> dict:
    mods = sorted(modalities)
    if mods == ["flow", "rgb"]:
        return {"rgb": theta, "flow": 1.0 - theta}
    if len(mods) == 1:
        return {mods[0]: 1.0}
    raise ValueError(f"unsupported modality set {mods}")


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy class-wise suppression of overlapping detections.

    Candidates are visited by descending score (ties: earlier start, then
    shorter); one is kept iff its temporal IoU with every kept detection is
    at or below the threshold.
    """
    if len({d.class_id for d in detections}) > 1:
        raise ValueError("nms operates on detections of a single class")
    ordered = sorted(
        detections,
        key=lambda d: (-d.score, d.start_sec, d.end_sec - d.start_sec),
    )
    kept: list[Detection] = []
    for det in ordered:
        if all(
            tiou((det.start_sec, det.end_sec), (k.start_sec, k.end_sec)) <= iou_threshold
            for k in kept
        ):
            kept.append(det)
    return kept


def detect(models: dict, features: dict, config: InferenceConfig) -> list[Detection]:
    """Run the full pipeline on one video; deterministic.

    ``models`` and ``features`` are keyed by modality and must agree; both
    streams must have the same number of segments. Output is sorted by
    descending score (ties: class, start).
    """
    if set(models.keys()) != set(features.keys()):
        raise ValueError(
            f"modalities of models {sorted(models)} and features {sorted(features)} differ"
        )
    feats = {m: check_features(x) for m, x in features.items()}
    lengths = {m: x.shape[0] for m, x in feats.items()}
    if len(set(lengths.values())) != 1:
        raise ValueError(f"modality segment counts differ: {lengths}")

    lams = {}
    probs = []
    for modality in sorted(models):
        model = models[modality]
        lam = attention(model, feats[modality])
        lams[modality] = lam
        probs.append(video_probs(model, pool(feats[modality], lam)))

    classes = select_classes(probs, config)
    fused = fused_attention([lams[m] for m in sorted(lams)])
    proposals = propose(fused, classes, config)

    weights = _stream_weights(models.keys(), config.theta)
    activations = {
        m: (feats[m] @ models[m].classifier.T) * lams[m][:, None] for m in models
    }
    by_class: dict[int, list[Detection]] = {}
    for prop in proposals:
        sl = slice(prop.t_start, prop.t_end + 1)
        score = sum(
            weights[m] * float(np.mean(activations[m][sl, prop.class_id]))
            for m in models
        )
        by_class.setdefault(prop.class_id, []).append(Detection(
            class_id=prop.class_id,
            t_start=prop.t_start,
            t_end=prop.t_end,
            start_sec=prop.t_start * config.segment_seconds,
            end_sec=(prop.t_end + 1) * config.segment_seconds,
            score=score,
        ))

    final: list[Detection] = []
    for class_id in sorted(by_class):
        final.extend(nms(by_class[class_id], config.nms_iou))
    final.sort(key=lambda d: (-d.score, d.class_id, d.t_start, d.t_end))
    return final
