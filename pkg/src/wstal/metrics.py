"""Temporal-IoU detection evaluation: per-class AP at IoU thresholds, mAP.

Matching follows the standard temporal localization benchmark protocol:
detections are visited by descending score, each greedily claims the
highest-IoU still-unmatched ground truth of its class in its video, and a
claim counts as a true positive iff that IoU is at or above the threshold.
AP interpolates precision (max precision at any recall at or above r) over
the recall steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

DEFAULT_IOU_THRESHOLDS = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class GroundTruthSegment:
    video_id: str
    label: str
    start_sec: float
    end_sec: float


@dataclass(frozen=True)
class ScoredSegment:
    video_id: str
    label: str
    start_sec: float
    end_sec: float
    score: float


def ground_truth_from_json(doc: dict) -> list[GroundTruthSegment]:
    return [
        GroundTruthSegment(vid, e["label"], float(e["segment"][0]), float(e["segment"][1]))
        for vid, entries in doc.items()
        for e in entries
    ]


def detections_from_json(doc: dict) -> list[ScoredSegment]:
    return [
        ScoredSegment(vid, e["label"], float(e["segment"][0]), float(e["segment"][1]),
                      float(e["score"]))
        for vid, entries in doc.items()
        for e in entries
    ]


def tiou(a, b) -> float:
    """Intersection over union of two (start, end) intervals on the real line."""
    a_start, a_end = float(a[0]), float(a[1])
    b_start, b_end = float(b[0]), float(b[1])
    if a_start >= a_end or b_start >= b_end:
        raise ValueError(f"degenerate interval: {a} vs {b}")
    inter = min(a_end, b_end) - max(a_start, b_start)
    if inter <= 0:
        return 0.0
    union = max(a_end, b_end) - min(a_start, b_start)
    return inter / union


def average_precision(detections, ground_truths, iou_threshold: float) -> float:
    """Interpolated AP for one class across all videos; 0 without ground truth.

    ``detections``: ScoredSegment list (single class). ``ground_truths``:
    GroundTruthSegment list (same class).
    """
    n_gt = len(ground_truths)
    if n_gt == 0:
        return 0.0
    if not detections:
        return 0.0

    gt_by_video: dict[str, list[GroundTruthSegment]] = {}
    for gt in ground_truths:
        gt_by_video.setdefault(gt.video_id, []).append(gt)
    matched = {vid: [False] * len(gts) for vid, gts in gt_by_video.items()}

    ordered = sorted(detections, key=lambda d: (-d.score, d.video_id, d.start_sec, d.end_sec))
    tp = np.zeros(len(ordered))
    fp = np.zeros(len(ordered))
    for i, det in enumerate(ordered):
        best_iou = 0.0
        best_j = -1
        for j, gt in enumerate(gt_by_video.get(det.video_id, [])):
            if matched[det.video_id][j]:
                continue
            overlap = tiou((det.start_sec, det.end_sec), (gt.start_sec, gt.end_sec))
            if overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            tp[i] = 1.0
            matched[det.video_id][best_j] = True
        else:
            fp[i] = 1.0

    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(fp)
    recall = cum_tp / n_gt
    precision = cum_tp / (cum_tp + cum_fp)
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * interp))


@dataclass(frozen=True)
class EvalResult:
    iou_thresholds: tuple
    labels: tuple  # classes with at least one ground-truth instance
    ap: np.ndarray  # (len(labels), len(iou_thresholds))
    mean_ap: np.ndarray  # (len(iou_thresholds),)
    ignored_labels: tuple  # detection labels without any ground truth

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label"] + [repr(float(t)) for t in self.iou_thresholds])
            for i, label in enumerate(self.labels):
                writer.writerow([label] + [repr(float(v)) for v in self.ap[i]])
            writer.writerow(["mAP"] + [repr(float(v)) for v in self.mean_ap])

    def format_table(self) -> str:
        width = max([len("label"), len("mAP")] + [len(str(l)) for l in self.labels])
        header = "label".ljust(width) + "".join(f"  AP@{t:g}".rjust(9) for t in self.iou_thresholds)
        lines = [header]
        for i, label in enumerate(self.labels):
            lines.append(str(label).ljust(width)
                         + "".join(f"{v:9.4f}" for v in self.ap[i]))
        lines.append("mAP".ljust(width) + "".join(f"{v:9.4f}" for v in self.mean_ap))
        return "\n".join(lines)


def evaluate(
    detections: list[ScoredSegment],
    ground_truths: list[GroundTruthSegment],
    iou_thresholds=DEFAULT_IOU_THRESHOLDS,
) -> EvalResult:
    """Per-class AP at each threshold plus the mAP row.

    Classes are those present in the ground truth; detections labeled with
    anything else are reported back in ``ignored_labels`` and not scored.
    """
    thresholds = tuple(float(t) for t in iou_thresholds)
    if not thresholds:
        raise ValueError("need at least one IoU threshold")
    labels = tuple(sorted({gt.label for gt in ground_truths}))
    ignored = tuple(sorted({d.label for d in detections} - set(labels)))

    det_by_label: dict[str, list[ScoredSegment]] = {l: [] for l in labels}
    for det in detections:
        if det.label in det_by_label:
            det_by_label[det.label].append(det)
    gt_by_label: dict[str, list[GroundTruthSegment]] = {l: [] for l in labels}
    for gt in ground_truths:
        gt_by_label[gt.label].append(gt)

    ap = np.zeros((len(labels), len(thresholds)))
    for i, label in enumerate(labels):
        for j, thr in enumerate(thresholds):
            ap[i, j] = average_precision(det_by_label[label], gt_by_label[label], thr)
    mean_ap = ap.mean(axis=0) if labels else np.zeros(len(thresholds))
    return EvalResult(iou_thresholds=thresholds, labels=labels, ap=ap,
                      mean_ap=mean_ap, ignored_labels=ignored)
