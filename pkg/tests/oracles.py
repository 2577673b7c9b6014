"""Independent reference implementations used to verify the library.

These deliberately re-derive results with naive step-by-step algorithms and
share no code with the implementations they check.
"""


def naive_average_precision(dets, gts, thr):
    """Greedy matching and literal interpolated-precision semantics."""
    if not gts:
        return 0.0
    order = sorted(dets, key=lambda d: (-d.score, d.video_id, d.start_sec, d.end_sec))
    matched = set()
    flags = []
    for det in order:
        best = None
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if j in matched or gt.video_id != det.video_id:
                continue
            inter = min(det.end_sec, gt.end_sec) - max(det.start_sec, gt.start_sec)
            if inter <= 0:
                overlap = 0.0
            else:
                union = max(det.end_sec, gt.end_sec) - min(det.start_sec, gt.start_sec)
                overlap = inter / union
            if overlap > best_iou:
                best_iou = overlap
                best = j
        if best is not None and best_iou >= thr:
            matched.add(best)
            flags.append(True)
        else:
            flags.append(False)
    precisions, recalls = [], []
    tp = fp = 0
    for flag in flags:
        tp += flag
        fp += not flag
        precisions.append(tp / (tp + fp))
        recalls.append(tp / len(gts))
    ap = 0.0
    prev_r = 0.0
    for i, r in enumerate(recalls):
        if r != prev_r:
            p_interp = max(p for p, rr in zip(precisions, recalls) if rr >= r)
            ap += (r - prev_r) * p_interp
        prev_r = r
    return ap


def brute_force_nms(dets, thr):
    """Greedy suppression with an explicit pairwise overlap scan."""

    def overlap(a, b):
        inter = min(a.end_sec, b.end_sec) - max(a.start_sec, b.start_sec)
        if inter <= 0:
            return 0.0
        return inter / (max(a.end_sec, b.end_sec) - min(a.start_sec, b.start_sec))

    ordered = sorted(dets, key=lambda d: (-d.score, d.start_sec, d.end_sec - d.start_sec))
    kept = []
    for d in ordered:
        if all(overlap(d, k) <= thr for k in kept):
            kept.append(d)
    return kept
