"""IoU / F1 / recall evaluation of label maps against ground-truth masks.

Cluster-to-object correspondence is computed ONCE over the pooled pixel
counts of the whole sequence, never per frame. A labeling that switches ids
between batches therefore scores lower than the same partition with stable
ids, which is exactly the consistency the pipeline is meant to provide.

Empty-mask conventions: both masks empty -> all metrics 1; exactly one
empty -> all metrics 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor_io import LabelMapSequence

MATCH_MODES = ("majority", "best-iou")


@dataclass
class MetricsReport:
    per_frame: list  # (frame_id, iou, f1, recall)
    per_sequence: tuple  # (mean_iou, mean_f1, mean_recall)
    matching: dict


def binary_metrics(pred: np.ndarray, gt: np.ndarray):
    """(iou, f1, recall) from pixel counts of two binary masks."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ShapeError(f"mask shapes differ: {pred.shape} vs {gt.shape}")

    pred_any = bool(pred.any())
    gt_any = bool(gt.any())
    if not pred_any and not gt_any:
        return 1.0, 1.0, 1.0
    if pred_any != gt_any:
        return 0.0, 0.0, 0.0

    tp = float(np.count_nonzero(pred & gt))
    fp = float(np.count_nonzero(pred & ~gt))
    fn = float(np.count_nonzero(~pred & gt))
    iou = tp / (tp + fp + fn)
    recall = tp / (tp + fn)
    precision = tp / (tp + fp)
    f1 = 0.0 if tp == 0 else 2.0 * precision * recall / (precision + recall)
    return iou, f1, recall


def _contingency(pred: np.ndarray, gt: np.ndarray):
    pred = np.asarray(pred).ravel()
    gt = np.asarray(gt).ravel()
    n_clusters = int(pred.max()) + 1
    n_gt = int(gt.max()) + 1
    counts = np.bincount(
        pred.astype(np.int64) * n_gt + gt.astype(np.int64),
        minlength=n_clusters * n_gt,
    ).reshape(n_clusters, n_gt)
    return counts


def match_clusters(pred: np.ndarray, gt: np.ndarray, mode: str = "majority") -> dict:
    """Correspondence between predicted cluster ids and ground-truth ids.

    ``pred``/``gt`` may be single grids or stacked sequences; pixel counts
    are pooled over everything passed in.

    majority: each cluster -> the gt id (background included) holding the
    plurality of its pixels; ties -> background, then lowest object id.
    Returns {cluster_id: gt_id}.

    best-iou: each gt object -> the single cluster with maximal IoU;
    ties -> lowest cluster id. Returns {gt_object_id: cluster_id}.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"grid shapes differ: {pred.shape} vs {gt.shape}")
    if mode not in MATCH_MODES:
        raise ValueError(f"unknown matching mode {mode!r}")

    counts = _contingency(pred, gt)
    if mode == "majority":
        assignment = {}
        for cluster in range(counts.shape[0]):
            row = counts[cluster]
            if row.sum() == 0:
                continue  # cluster id not present
            top = np.flatnonzero(row == row.max())
            assignment[cluster] = 0 if 0 in top else int(top.min())
        return assignment

    cluster_area = counts.sum(axis=1)
    assignment = {}
    for obj in range(1, counts.shape[1]):
        inter = counts[:, obj]
        obj_area = inter.sum()
        if obj_area == 0:
            continue  # object id not present
        union = cluster_area + obj_area - inter
        iou = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
        assignment[obj] = int(np.argmax(iou))  # first max -> lowest cluster id
    return assignment


def _frame_scores(pred_map, gt_mask, mode, assignment):
    objects = sorted(int(v) for v in np.unique(gt_mask) if v != 0)
    if not objects:
        if mode == "majority":
            matched = [c for c, o in assignment.items() if o != 0]
        else:
            matched = sorted(set(assignment.values()))
        pred_fg = np.isin(pred_map, matched)
        return binary_metrics(pred_fg, np.zeros_like(gt_mask, dtype=bool))

    scores = []
    for obj in objects:
        if mode == "majority":
            clusters = [c for c, o in assignment.items() if o == obj]
        else:
            clusters = [assignment[obj]] if obj in assignment else []
        pred_mask = np.isin(pred_map, clusters) if clusters else np.zeros_like(pred_map, dtype=bool)
        scores.append(binary_metrics(pred_mask, gt_mask == obj))
    arr = np.array(scores, dtype=np.float64)
    return tuple(arr.mean(axis=0))


def evaluate_sequence(pred: LabelMapSequence, gts: list, mode: str = "majority",
                      frame_ids: list | None = None) -> MetricsReport:
    """Per-frame and sequence-mean metrics with pooled matching.

    ``gts`` is one mask per frame (uint8 grids, 0 = background). Objects are
    averaged unweighted within a frame, frames averaged within the sequence.
    """
    n = pred.maps.shape[0]
    if len(gts) != n:
        raise ShapeError(f"{n} predicted frames vs {len(gts)} ground-truth masks")
    gt_stack = np.stack([np.asarray(g) for g in gts])
    if gt_stack.shape != pred.maps.shape:
        raise ShapeError(
            f"frame dims differ: predictions {pred.maps.shape} vs masks {gt_stack.shape}"
        )
    if frame_ids is None:
        frame_ids = [f"{i:05d}" for i in range(n)]

    assignment = match_clusters(pred.maps, gt_stack, mode=mode)

    per_frame = []
    for i in range(n):
        iou, f1, recall = _frame_scores(pred.maps[i], gt_stack[i], mode, assignment)
        per_frame.append((frame_ids[i], float(iou), float(f1), float(recall)))

    values = np.array([row[1:] for row in per_frame], dtype=np.float64)
    per_sequence = tuple(values.mean(axis=0))
    return MetricsReport(
        per_frame=per_frame,
        per_sequence=per_sequence,
        matching={"mode": mode, "assignment": dict(assignment)},
    )


def format_table(rows: list) -> str:
    """UTF-8 metrics table; rows are (name, iou, f1, recall).

    Appends an Avg row holding the arithmetic means of the listed rows.
    """
    width = max([len("sequence"), len("Avg")] + [len(r[0]) for r in rows]) + 2
    lines = [f"{'sequence':<{width}}{'IOU':>8}{'F1':>8}{'Recall':>8}"]
    for name, iou, f1, recall in rows:
        lines.append(f"{name:<{width}}{iou:>8.4f}{f1:>8.4f}{recall:>8.4f}")
    means = np.array([r[1:] for r in rows], dtype=np.float64).mean(axis=0)
    lines.append(f"{'Avg':<{width}}{means[0]:>8.4f}{means[1]:>8.4f}{means[2]:>8.4f}")
    return "\n".join(lines) + "\n"


def write_report(path, sequence_reports: dict) -> None:
    """Machine-readable key/value report, one block per sequence."""
    lines = []
    for name, report in sequence_reports.items():
        lines.append(f"sequence={name}")
        for frame_id, iou, f1, recall in report.per_frame:
            lines.append(
                f"frame={frame_id} iou={iou:.4f} f1={f1:.4f} recall={recall:.4f}"
            )
        miou, mf1, mrec = report.per_sequence
        lines.append(f"mean_iou={miou:.4f} mean_f1={mf1:.4f} mean_recall={mrec:.4f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
